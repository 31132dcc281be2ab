#pragma once

// Self-checks behind the `gradcheck`, `boundcheck` and `diagnose` commands.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hyperpp/metrics.hpp"

namespace hyperpp {

// ---------------------------------------------------------------- gradcheck

struct GradcheckOptions {
  std::uint64_t seed = 20240607;
  int draws = 100;  // per suite
  double tolerance = 1e-5;
  /// Test hook: the named suite perturbs its analytic derivative.
  std::string corrupt_suite;
};

struct SuiteResult {
  std::string name;
  int draws = 0;
  double max_rel_err = 0.0;
  bool passed = false;
};

std::vector<std::string> gradcheck_suite_names();

/// Central finite differences against every analytic derivative. Throws
/// ContractError for an unknown corrupt_suite.
std::vector<SuiteResult> run_gradcheck(const GradcheckOptions& opts = {});

void print_gradcheck(std::ostream& os, const std::vector<SuiteResult>& results, double tolerance);

// --------------------------------------------------------------- boundcheck

struct BoundcheckOptions {
  std::uint64_t seed = 20240608;
  int inputs = 10000;  // per (d, c) cell
};

struct BoundSweep {
  std::string name;
  long checked = 0;
  long violations = 0;
  double worst_ratio = 0.0;  // max observed / bound
};

struct BoundcheckReport {
  std::vector<BoundSweep> sweeps;
  double scaled_radius_bound = 0.0;    // alpha / sqrt(c) at alpha = 0.95, c = 1
  double max_scaled_radius = 0.0;      // observed
  double tanh_conformal_bound = 0.0;   // 2 cosh^2(sqrt(c)) at c = 1
  double x0_max = 0.0;                 // time component bound at c = 1

  long violations() const;
};

BoundcheckReport run_boundcheck(const BoundcheckOptions& opts = {});

void print_boundcheck(std::ostream& os, const BoundcheckReport& rep);

// ----------------------------------------------------------------- diagnose

struct RunSummary {
  std::string source;
  std::size_t rows = 0;
  std::vector<double> mean;  // one per column of kMetricsColumns
  std::vector<double> max;
  double last_half_clip_fraction = 0.0;
};

/// Throws ContractError for an empty table.
RunSummary summarize_metrics(const std::vector<MetricsRow>& rows, const std::string& source);

/// Per-run table followed by ratios for every ordered pair of runs.
void print_diagnosis(std::ostream& os, const std::vector<RunSummary>& runs);

}  // namespace hyperpp
