#include "hyperpp/regularization.hpp"

#include <cmath>
#include <string>

namespace hyperpp {

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::TanH;
  if (name == "relu") return Activation::ReLU;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected tanh|relu)");
}

std::string_view to_string(Activation a) noexcept { return a == Activation::TanH ? "tanh" : "relu"; }

double activate(Activation a, double x) noexcept {
  return a == Activation::TanH ? std::tanh(x) : (x > 0.0 ? x : 0.0);
}

double activate_grad(Activation a, double x) noexcept {
  if (a == Activation::TanH) {
    const double t = std::tanh(x);
    return 1.0 - t * t;
  }
  return x > 0.0 ? 1.0 : 0.0;
}

void RmsNormConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ContractError("RmsNormConfig: epsilon must be > 0");
  if (affine) throw ContractError("RmsNormConfig: affine parameters are not supported");
}

namespace {

double rms(const Vector& x, double eps) {
  return std::sqrt(eps + x.squaredNorm() / static_cast<double>(x.size()));
}

void require_nonempty(const Vector& x, const char* op) {
  if (x.size() < 1) throw ContractError(std::string(op) + ": dimension must be >= 1");
}

}  // namespace

Vector rmsnorm(const Vector& x, const RmsNormConfig& cfg) {
  cfg.validate();
  require_nonempty(x, "rmsnorm");
  return x / rms(x, cfg.epsilon);
}

Matrix rmsnorm_jacobian(const Vector& x, const RmsNormConfig& cfg) {
  cfg.validate();
  require_nonempty(x, "rmsnorm_jacobian");
  const auto d = x.size();
  const double mu = rms(x, cfg.epsilon);
  Matrix jac = Matrix::Identity(d, d) / mu;
  jac.noalias() -= x * x.transpose() / (static_cast<double>(d) * mu * mu * mu);
  return jac;
}

Vector regularized_embedding(const Vector& x, const RmsNormConfig& cfg, Activation activation) {
  Vector y = rmsnorm(x, cfg);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(x.size()));
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = inv_sqrt_d * activate(activation, y[i]);
  return y;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void ScalingParams::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ContractError("ScalingParams: alpha must lie in (0,1)");
  if (!std::isfinite(xi)) throw DomainError("ScalingParams: xi must be finite");
}

double ScalingParams::rho_max() const {
  validate();
  return std::atanh(alpha) / c.sqrt();
}

double ScalingParams::factor() const { return rho_max() * sigmoid(xi); }

Vector learned_scaling(const Vector& x_hat, const ScalingParams& p) { return p.factor() * x_hat; }

double prop1_norm_bound(Activation /*activation*/, Eigen::Index /*dim*/) {
  // Both supported activations are 1-Lipschitz with f(0) = 0.
  return 1.0;
}

double conformal_bound_for_radius(double radius, Curvature c) {
  const double ch = std::cosh(c.sqrt() * radius);
  return 2.0 * ch * ch;
}

BoundReport check_prop1_bounds(const Matrix& batch, Activation activation, Curvature c, double scale) {
  BoundReport rep;
  const double radius = scale * prop1_norm_bound(activation, batch.cols());
  rep.embedding_norm_bound = radius;
  rep.conformal_factor_bound = conformal_bound_for_radius(radius, c);
  rep.x0_max = check_cor1_x0max(Vector::Constant(1, radius), c);
  constexpr double kSlack = 1e-9;
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    const Vector row = scale * batch.row(i).transpose();
    const double n = row.norm();
    const double t = std::tanh(c.sqrt() * n);
    const double lambda = 2.0 / (1.0 - t * t);
    const double x0 = check_cor1_x0max(row, c);
    rep.max_embedding_norm = std::max(rep.max_embedding_norm, n);
    rep.max_conformal_factor = std::max(rep.max_conformal_factor, lambda);
    rep.max_x0 = std::max(rep.max_x0, x0);
    const bool bad = !(n < rep.embedding_norm_bound + kSlack) ||
                     !(lambda < rep.conformal_factor_bound + kSlack) || !(x0 <= rep.x0_max + kSlack);
    if (bad) ++rep.violations;
  }
  rep.violated = rep.violations > 0;
  return rep;
}

double check_cor1_x0max(const Vector& x_hat, Curvature c) {
  const double t = std::tanh(c.sqrt() * x_hat.norm());
  const double t2 = t * t;
  return (1.0 + t2) / (c.sqrt() * (1.0 - t2));
}

SpectralNormResult spectral_normalize(const Matrix& w, int iters) {
  if (iters < 1) throw ContractError("spectral_normalize: iters must be >= 1");
  if (w.size() == 0 || w.cwiseAbs().maxCoeff() == 0.0) return {w, 0.0};
  // Fixed, non-degenerate start vector.
  Vector v(w.cols());
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = 1.0 + 0.5 * std::sin(1.0 + 7.0 * static_cast<double>(j));
  v.normalize();
  double sigma = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vector u = w * v;
    const double un = u.norm();
    if (un == 0.0) break;
    u /= un;
    v = w.transpose() * u;
    const double next = v.norm();
    v /= next;
    const bool converged = std::abs(next - sigma) <= 1e-15 * next;
    sigma = next;
    if (converged) break;
  }
  if (sigma == 0.0) return {w, 0.0};
  return {w / sigma, sigma};
}

bool check_lemma1(const Matrix& w_hat, const Vector& b, const Vector& x, Activation activation) {
  if (w_hat.cols() != x.size() || w_hat.rows() != b.size()) {
    throw ContractError("check_lemma1: shape mismatch");
  }
  Vector pre = w_hat * x + b;
  for (Eigen::Index i = 0; i < pre.size(); ++i) pre[i] = activate(activation, pre[i]);
  // |f(0)| = 0 and L = 1 for both activations.
  return pre.norm() <= x.norm() + b.norm() + 1e-9;
}

}  // namespace hyperpp
