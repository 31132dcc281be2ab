#pragma once

// Norm-bounding stack applied to the last Euclidean embedding before the
// exponential map: RMSNorm (no affine parameters), 1/sqrt(d) scaling, a
// 1-Lipschitz activation and a sigmoid-gated learned scale. Also runtime
// checks for the resulting norm, conformal-factor and time-component bounds,
// and a power-iteration spectral normalizer for single-layer Lipschitz checks.

#include <string_view>

#include "hyperpp/manifold.hpp"

namespace hyperpp {

enum class Activation { TanH, ReLU };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a) noexcept;

double activate(Activation a, double x) noexcept;
/// Derivative of the activation given its pre-activation input.
double activate_grad(Activation a, double x) noexcept;

struct RmsNormConfig {
  double epsilon = 1e-8;
  bool affine = false;

  /// Throws ContractError unless epsilon > 0 and affine == false.
  void validate() const;
};

Vector rmsnorm(const Vector& x, const RmsNormConfig& cfg = {});
Matrix rmsnorm_jacobian(const Vector& x, const RmsNormConfig& cfg = {});

/// (1/sqrt(d)) * f(rmsnorm(x)).
Vector regularized_embedding(const Vector& x, const RmsNormConfig& cfg, Activation activation);

struct ScalingParams {
  double xi = 0.0;      // learnable logit
  double alpha = 0.95;  // target boundary fraction of the Poincare ball radius
  Curvature c{1.0};

  void validate() const;
  /// atanh(alpha) / sqrt(c)
  double rho_max() const;
  /// rho_max * sigmoid(xi)
  double factor() const;
};

double sigmoid(double x) noexcept;

Vector learned_scaling(const Vector& x_hat, const ScalingParams& p);

struct BoundReport {
  double embedding_norm_bound = 0.0;
  double conformal_factor_bound = 0.0;
  double x0_max = 0.0;
  bool violated = false;

  // Largest observed values over the checked batch.
  double max_embedding_norm = 0.0;
  double max_conformal_factor = 0.0;
  double max_x0 = 0.0;
  Eigen::Index violations = 0;
};

/// Norm bound |f(0)|/sqrt(d) + L for the regularized embedding, with L = 1
/// and f(0) = 0 for the supported activations.
double prop1_norm_bound(Activation activation, Eigen::Index dim);
/// 2 cosh^2(sqrt(c) * radius)
double conformal_bound_for_radius(double radius, Curvature c);

/// Checks every row of batch (N x d, rows from regularized_embedding) against
/// the norm and conformal-factor bounds. An optional scale multiplies every
/// row first (and the bounds with it), covering learned scaling.
BoundReport check_prop1_bounds(const Matrix& batch, Activation activation, Curvature c,
                               double scale = 1.0);

/// Largest time component reachable from x_hat through exp0 and the isometry:
/// (1 + tanh^2(sqrt(c)|x|)) / (sqrt(c) (1 - tanh^2(sqrt(c)|x|))).
double check_cor1_x0max(const Vector& x_hat, Curvature c);

struct SpectralNormResult {
  Matrix w_hat;
  double sigma_max = 0.0;
};

/// Power iteration on W^T W from a fixed start vector. Returns W unchanged
/// with sigma_max = 0 for a zero matrix.
SpectralNormResult spectral_normalize(const Matrix& w, int iters);

/// |f(W_hat x + b)| <= |f(0)| + |x| + |b| (+1e-9), assuming |W_hat|_2 = 1 and
/// a 1-Lipschitz activation.
bool check_lemma1(const Matrix& w_hat, const Vector& b, const Vector& x, Activation activation);

}  // namespace hyperpp
