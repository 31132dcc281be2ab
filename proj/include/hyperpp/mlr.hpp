#pragma once

// Hyperbolic multinomial logistic regression heads. Each class k owns a
// Euclidean normal z_k (length d) and a scalar shift r_k; the score v_k is the
// norm-weighted signed distance of the input to the class hyperplane.
//
//   Poincare (HNN++):  v_k = 2|z_k|/sqrt(c) * asinh((1-lambda) sinh(2 sqrt(c) r_k)
//                              + sqrt(c) lambda cosh(2 sqrt(c) r_k) <z_k/|z_k|, x>)
//   Hyperboloid:       v_k = |z_k|/sqrt(c) * asinh(sqrt(c)/|z_k| * (-x0 sinh(sqrt(c) r_k) |z_k|
//                              + cosh(sqrt(c) r_k) <z_k, x_s>))

#include <cstdint>
#include <span>

#include "hyperpp/manifold.hpp"

namespace hyperpp {

enum class MlrModel { PoincareHNNpp, Hyperboloid };

/// Added inside |z_k| as sqrt(|z_k|^2 + eps^2) so the normal never has zero
/// length.
inline constexpr double kNormFloor = 1e-12;

struct MlrHead {
  MlrModel model;
  Matrix z;  // K x d
  Vector r;  // K
  Curvature c;

  Eigen::Index num_classes() const noexcept { return z.rows(); }
  Eigen::Index dim() const noexcept { return z.cols(); }

  /// z ~ U(-1/sqrt(d), 1/sqrt(d)) per entry, r = 0.
  static MlrHead init(MlrModel model, Eigen::Index classes, Eigen::Index dim, Curvature c,
                      std::uint64_t seed);
};

using ScoreVector = Vector;

/// Overflow-free asinh; uses log(2|a|) for large |a|.
double stable_asinh(double a) noexcept;

ScoreVector poincare_mlr_score(const MlrHead& head, const PoincarePoint& x);
/// K x d matrix, row k = d v_k / d x.
Matrix poincare_mlr_score_grad_x(const MlrHead& head, const PoincarePoint& x);

struct ParamGrads {
  Matrix z;  // K x d, row k = d v_k / d z_k
  Vector r;  // K,     entry k = d v_k / d r_k
};
ParamGrads poincare_mlr_score_grad_params(const MlrHead& head, const PoincarePoint& x);

ScoreVector hyperboloid_mlr_score(const MlrHead& head, const HyperboloidPoint& x);

struct HyperboloidMlrGrads {
  Matrix x;  // K x (d+1), row k = d v_k / d x (time component first)
  Matrix z;  // K x d
  Vector r;  // K
};
HyperboloidMlrGrads hyperboloid_mlr_score_grad(const MlrHead& head, const HyperboloidPoint& x);

namespace detail {

// Batched kernels used by the network. Inputs are single points in raw form;
// upstream is dL/dv (length K). All outputs are accumulated (+=), except
// scores which are overwritten.

void poincare_mlr_forward(const Matrix& z, std::span<const double> r, double sqrt_c,
                          const double* x, Eigen::Index d, double* scores);
void poincare_mlr_backward(const Matrix& z, std::span<const double> r, double sqrt_c,
                           const double* x, Eigen::Index d, const double* upstream,
                           double* grad_x, Matrix* grad_z, double* grad_r);

/// x has length d+1 (time first).
void hyperboloid_mlr_forward(const Matrix& z, std::span<const double> r, double sqrt_c,
                             const double* x, Eigen::Index d, double* scores);
void hyperboloid_mlr_backward(const Matrix& z, std::span<const double> r, double sqrt_c,
                              const double* x, Eigen::Index d, const double* upstream,
                              double* grad_x, Matrix* grad_z, double* grad_r);

}  // namespace detail

}  // namespace hyperpp
