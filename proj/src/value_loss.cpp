#include "hyperpp/value_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hyperpp/softmax.hpp"

namespace hyperpp {

namespace {

// Upper tail Q(t) = P(Z > t).
double upper_tail(double t) { return 0.5 * std::erfc(t / std::numbers::sqrt2); }

// P(t1 < Z < t2) for t1 <= t2, evaluated in whichever tail avoids cancellation.
double normal_mass(double t1, double t2) {
  if (t1 >= 0.0) return upper_tail(t1) - upper_tail(t2);
  if (t2 <= 0.0) return upper_tail(-t2) - upper_tail(-t1);
  return 1.0 - upper_tail(t2) - upper_tail(-t1);
}

}  // namespace

void HlGaussConfig::validate() const {
  if (num_bins < 2) throw ContractError("HlGaussConfig: num_bins must be >= 2");
  if (!(v_min < v_max)) throw ContractError("HlGaussConfig: v_min must be < v_max");
  if (!(sigma_ratio > 0.0)) throw ContractError("HlGaussConfig: sigma_ratio must be > 0");
}

ValueDistribution hl_gauss_encode(double y, const HlGaussConfig& cfg) {
  cfg.validate();
  if (!std::isfinite(y)) throw DomainError("hl_gauss_encode: non-finite target");
  y = std::clamp(y, cfg.v_min, cfg.v_max);
  const double sigma = cfg.sigma();
  const double w = cfg.bin_width();
  Vector probs(cfg.num_bins);
  for (int i = 0; i < cfg.num_bins; ++i) {
    const double lo = cfg.v_min + i * w;
    const double hi = (i + 1 == cfg.num_bins) ? cfg.v_max : lo + w;
    probs[i] = normal_mass((lo - y) / sigma, (hi - y) / sigma);
  }
  probs /= probs.sum();
  return {std::move(probs)};
}

double hl_gauss_decode(const ValueDistribution& dist, const HlGaussConfig& cfg) {
  cfg.validate();
  if (dist.probs.size() != cfg.num_bins) throw ContractError("hl_gauss_decode: wrong number of bins");
  double v = 0.0;
  for (int i = 0; i < cfg.num_bins; ++i) v += dist.probs[i] * cfg.center(i);
  return v;
}

double hl_gauss_decode_logits(std::span<const double> logits, const HlGaussConfig& cfg) {
  if (static_cast<int>(logits.size()) != cfg.num_bins) {
    throw ContractError("hl_gauss_decode_logits: wrong number of bins");
  }
  Eigen::Map<const Eigen::RowVectorXd> l(logits.data(), cfg.num_bins);
  Eigen::RowVectorXd p(cfg.num_bins);
  softmax(l, p);
  return hl_gauss_decode({p.transpose()}, cfg);
}

LossAndGrad hl_gauss_loss(const Matrix& critic_logits, std::span<const double> targets,
                          const HlGaussConfig& cfg) {
  cfg.validate();
  const auto n = critic_logits.rows();
  if (critic_logits.cols() != cfg.num_bins || static_cast<Eigen::Index>(targets.size()) != n) {
    throw ContractError("hl_gauss_loss: shape mismatch");
  }
  LossAndGrad out{0.0, Matrix::Zero(n, cfg.num_bins)};
  if (n == 0) return out;
  Eigen::RowVectorXd logp(cfg.num_bins);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector target = hl_gauss_encode(targets[static_cast<std::size_t>(i)], cfg).probs;
    log_softmax(critic_logits.row(i), logp);
    out.loss -= target.dot(logp.transpose());
    out.grad.row(i) = (logp.array().exp() - target.transpose().array()) / static_cast<double>(n);
  }
  out.loss /= static_cast<double>(n);
  return out;
}

LossAndGrad mse_loss(std::span<const double> values, std::span<const double> targets) {
  if (values.size() != targets.size()) throw ContractError("mse_loss: shape mismatch");
  const auto n = static_cast<Eigen::Index>(values.size());
  LossAndGrad out{0.0, Matrix::Zero(n, 1)};
  if (n == 0) return out;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double diff = values[static_cast<std::size_t>(i)] - targets[static_cast<std::size_t>(i)];
    out.loss += diff * diff;
    out.grad(i, 0) = 2.0 * diff / static_cast<double>(n);
  }
  out.loss /= static_cast<double>(n);
  return out;
}

}  // namespace hyperpp
