#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "hyperpp/checks.hpp"
#include "hyperpp/errors.hpp"

namespace hyperpp {
namespace {

constexpr std::size_t kCols = kMetricsColumns.size();

std::array<double, kCols> values_of(const MetricsRow& r) {
  return {static_cast<double>(r.step), r.mean_return,   r.entropy,       r.entropy_variance,
          r.update_kl,                 r.clip_fraction, r.mean_conformal_factor, r.max_embedding_norm,
          r.fc_grad_norm,              r.actor_grad_norm, r.value_loss,  r.policy_loss};
}

constexpr std::size_t kClipCol = 5;
constexpr std::size_t kNormCol = 7;
constexpr std::size_t kConformalCol = 6;

double ratio(double a, double b) {
  if (b == 0.0) return a == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return a / b;
}

}  // namespace

RunSummary summarize_metrics(const std::vector<MetricsRow>& rows, const std::string& source) {
  if (rows.empty()) throw ContractError(source + ": no metrics rows");
  RunSummary s;
  s.source = source;
  s.rows = rows.size();
  s.mean.assign(kCols, 0.0);
  s.max.assign(kCols, -std::numeric_limits<double>::infinity());
  for (const auto& r : rows) {
    const auto v = values_of(r);
    for (std::size_t c = 0; c < kCols; ++c) {
      s.mean[c] += v[c];
      s.max[c] = std::max(s.max[c], v[c]);
    }
  }
  for (auto& m : s.mean) m /= static_cast<double>(rows.size());
  // Last half of training, rounded so a single row counts.
  const std::size_t first = rows.size() / 2;
  double clip = 0.0;
  for (std::size_t i = first; i < rows.size(); ++i) clip += rows[i].clip_fraction;
  s.last_half_clip_fraction = clip / static_cast<double>(rows.size() - first);
  return s;
}

void print_diagnosis(std::ostream& os, const std::vector<RunSummary>& runs) {
  os << std::setprecision(6);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    os << "run " << i << ": " << r.source << " (" << r.rows << " rows)\n";
    os << "  " << std::left << std::setw(24) << "column" << std::right << std::setw(14) << "mean" << std::setw(14)
       << "max" << '\n';
    for (std::size_t c = 0; c < kCols; ++c) {
      os << "  " << std::left << std::setw(24) << kMetricsColumns[c] << std::right << std::setw(14) << r.mean[c]
         << std::setw(14) << r.max[c] << '\n';
    }
    os << "  " << std::left << std::setw(24) << "clip_fraction_last_half" << std::right << std::setw(14)
       << r.last_half_clip_fraction << '\n';
  }
  if (runs.size() < 2) return;
  os << "\npairwise ratios (run a / run b)\n";
  os << std::right << std::setw(4) << "a" << std::setw(4) << "b" << std::setw(20) << "max_embedding_norm"
     << std::setw(16) << "clip_fraction" << std::setw(20) << "clip_last_half" << std::setw(20)
     << "max_conformal" << '\n';
  for (std::size_t a = 0; a < runs.size(); ++a) {
    for (std::size_t b = 0; b < runs.size(); ++b) {
      if (a == b) continue;
      os << std::setw(4) << a << std::setw(4) << b << std::setw(20)
         << ratio(runs[a].max[kNormCol], runs[b].max[kNormCol]) << std::setw(16)
         << ratio(runs[a].mean[kClipCol], runs[b].mean[kClipCol]) << std::setw(20)
         << ratio(runs[a].last_half_clip_fraction, runs[b].last_half_clip_fraction) << std::setw(20)
         << ratio(runs[a].max[kConformalCol], runs[b].max[kConformalCol]) << '\n';
    }
  }
}

}  // namespace hyperpp
