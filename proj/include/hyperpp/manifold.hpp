#pragma once

// Poincare ball and hyperboloid (Lorentz) models of hyperbolic space with
// constant sectional curvature -c: points, exponential maps at the origin,
// conformal factor, Minkowski inner product, the isometry between the two
// models, and closed-form Jacobians of both exponential maps.

#include <Eigen/Core>

#include "hyperpp/errors.hpp"

namespace hyperpp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Magnitude c of the curvature -c. Always finite and strictly positive.
class Curvature {
 public:
  explicit Curvature(double c);

  double value() const noexcept { return c_; }
  double sqrt() const noexcept { return sqrt_c_; }

  friend bool operator==(const Curvature&, const Curvature&) = default;

 private:
  double c_;
  double sqrt_c_;
};

/// Below this tangent norm the exponential maps and their Jacobians switch to
/// second-order series expansions.
inline constexpr double kSmallNorm = 1e-8;

/// Absolute tolerance on |<x,x>_L + 1/c| for hyperboloid points near the
/// origin. Far from the origin the bound scales with c*x0^2 (see
/// minkowski_tolerance).
inline constexpr double kMinkowskiTol = 1e-9;

double minkowski_tolerance(double x0, Curvature c) noexcept;

class PoincarePoint {
 public:
  /// Throws DomainError unless coords are finite and c*|x|^2 < 1.
  PoincarePoint(Vector coords, Curvature c);

  static PoincarePoint origin(Eigen::Index dim, Curvature c);

  const Vector& coords() const noexcept { return coords_; }
  Curvature curvature() const noexcept { return c_; }
  Eigen::Index dim() const noexcept { return coords_.size(); }

 private:
  Vector coords_;
  Curvature c_;
};

/// Point on the forward sheet. coords[0] is the time component x0.
class HyperboloidPoint {
 public:
  /// Validates <x,x>_L = -1/c and x0 > 0. A time component that drifted from
  /// the constraint by more than the tolerance is re-projected from the space
  /// component when the drift is a pure rounding artefact (relative drift
  /// below 1e-6); larger violations throw DomainError.
  HyperboloidPoint(Vector coords, Curvature c);

  /// Builds the unique point with the given space component.
  static HyperboloidPoint from_space(const Vector& space, Curvature c);
  static HyperboloidPoint origin(Eigen::Index dim, Curvature c);

  const Vector& coords() const noexcept { return coords_; }
  double time() const noexcept { return coords_[0]; }
  auto space() const { return coords_.tail(coords_.size() - 1); }
  Curvature curvature() const noexcept { return c_; }
  /// Intrinsic dimension d (coords has d+1 entries).
  Eigen::Index dim() const noexcept { return coords_.size() - 1; }

 private:
  Vector coords_;
  Curvature c_;
};

/// Tangent vector at the origin of either model.
class TangentVector {
 public:
  enum class Model { Poincare, Hyperboloid };

  /// Poincare tangent space: coords of length d.
  static TangentVector poincare(Vector coords, Curvature c);
  /// Hyperboloid tangent space: coords of length d+1 with coords[0] == 0.
  static TangentVector hyperboloid(Vector coords, Curvature c);
  /// Hyperboloid tangent vector (0, euclidean).
  static TangentVector hyperboloid_from_euclidean(const Vector& euclidean, Curvature c);

  const Vector& coords() const noexcept { return coords_; }
  Curvature curvature() const noexcept { return c_; }
  Model model() const noexcept { return model_; }

 private:
  TangentVector(Vector coords, Curvature c, Model m);

  Vector coords_;
  Curvature c_;
  Model model_;
};

PoincarePoint poincare_exp0(const TangentVector& v);
Matrix poincare_exp0_jacobian(const TangentVector& v);

double conformal_factor(const PoincarePoint& x);
Vector conformal_factor_grad(const PoincarePoint& x);

HyperboloidPoint hyperboloid_exp0(const TangentVector& v);
Matrix hyperboloid_exp0_jacobian(const TangentVector& v);

double minkowski_inner(const Vector& a, const Vector& b);

HyperboloidPoint poincare_to_hyperboloid(const PoincarePoint& x);
PoincarePoint hyperboloid_to_poincare(const HyperboloidPoint& x);

namespace detail {

// Raw kernels shared with the batched network code. They skip point
// validation; callers are responsible for finiteness checks.

/// Scalar tanh(sqrt(c) t)/(sqrt(c) t), with its series below kSmallNorm.
double tanh_ratio(double norm, double sqrt_c) noexcept;
/// Scalar sinh(sqrt(c) t)/(sqrt(c) t), with its series below kSmallNorm.
double sinh_ratio(double norm, double sqrt_c) noexcept;

/// Writes exp0(v) on the Poincare ball into out (length d).
void poincare_exp0_raw(const double* v, Eigen::Index d, double sqrt_c, double* out) noexcept;
/// Vector-Jacobian product g^T J for the Poincare exp map (J is symmetric).
void poincare_exp0_vjp(const double* v, const double* g, Eigen::Index d, double sqrt_c,
                       double* out) noexcept;

/// Writes exp0((0, v)) on the hyperboloid into out (length d+1).
void hyperboloid_exp0_raw(const double* v, Eigen::Index d, double sqrt_c, double* out) noexcept;
/// g (length d+1) times the Jacobian, restricted to the d space inputs.
void hyperboloid_exp0_vjp(const double* v, const double* g, Eigen::Index d, double sqrt_c,
                          double* out) noexcept;

}  // namespace detail

}  // namespace hyperpp
