#pragma once

// Categorical value learning with Gaussian histogram targets (HL-Gauss) and
// the mean-squared-error baseline.

#include <span>

#include "hyperpp/manifold.hpp"

namespace hyperpp {

struct HlGaussConfig {
  int num_bins = 51;
  double v_min = -10.0;
  double v_max = 10.0;
  double sigma_ratio = 0.75;  // sigma as a fraction of the bin width

  void validate() const;
  double bin_width() const { return (v_max - v_min) / num_bins; }
  double sigma() const { return sigma_ratio * bin_width(); }
  double center(int i) const { return v_min + (i + 0.5) * bin_width(); }
};

/// Histogram over num_bins; non-negative and summing to one.
struct ValueDistribution {
  Vector probs;
};

ValueDistribution hl_gauss_encode(double y, const HlGaussConfig& cfg);
double hl_gauss_decode(const ValueDistribution& dist, const HlGaussConfig& cfg);
/// Expected value of softmax(logits) under the bin centers.
double hl_gauss_decode_logits(std::span<const double> logits, const HlGaussConfig& cfg);

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;  // same shape as the differentiated input
};

/// Mean cross-entropy between softmax(critic_logits) and the encoded targets.
/// grad = (softmax - target) / N.
LossAndGrad hl_gauss_loss(const Matrix& critic_logits, std::span<const double> targets,
                          const HlGaussConfig& cfg);

/// Mean squared error; grad is N x 1 with entries 2(v - t)/N.
LossAndGrad mse_loss(std::span<const double> values, std::span<const double> targets);

}  // namespace hyperpp
