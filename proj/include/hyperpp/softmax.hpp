#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Core>

namespace hyperpp {

/// Numerically stable log-softmax of one row.
template <typename In, typename Out>
void log_softmax(const Eigen::MatrixBase<In>& logits, Eigen::MatrixBase<Out>& out) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  out = logits.array() - lse;
}

template <typename In, typename Out>
void softmax(const Eigen::MatrixBase<In>& logits, Eigen::MatrixBase<Out>& out) {
  const double m = logits.maxCoeff();
  out = (logits.array() - m).exp();
  out /= out.sum();
}

}  // namespace hyperpp
