#pragma once

// Per-update training metrics and their CSV representation.

#include <array>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hyperpp {

struct MetricsRow {
  std::int64_t step = 0;  // environment steps consumed so far
  double mean_return = 0.0;
  double entropy = 0.0;
  double entropy_variance = 0.0;
  double update_kl = 0.0;
  double clip_fraction = 0.0;
  double mean_conformal_factor = 0.0;
  double max_embedding_norm = 0.0;
  double fc_grad_norm = 0.0;
  double actor_grad_norm = 0.0;
  double value_loss = 0.0;
  double policy_loss = 0.0;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

inline constexpr std::array<std::string_view, 12> kMetricsColumns{
    "step",          "mean_return",           "entropy",           "entropy_variance",
    "update_kl",     "clip_fraction",         "mean_conformal_factor", "max_embedding_norm",
    "fc_grad_norm",  "actor_grad_norm",       "value_loss",        "policy_loss"};

/// The header line, without the trailing newline.
std::string metrics_header();

/// One CSV line (no newline). Floats use the shortest decimal that round-trips.
std::string format_metrics_row(const MetricsRow& row);

/// Throws ParseError naming the 1-based line on malformed input.
std::vector<MetricsRow> read_metrics_csv(const std::string& path);
std::vector<MetricsRow> parse_metrics_csv(std::string_view text, const std::string& source = "<string>");

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, long line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  long line() const noexcept { return line_; }

 private:
  long line_;
};

/// Streams rows to a file; the header is written on open. Rows are flushed
/// as they are appended so an aborted run leaves a valid prefix.
class MetricsWriter {
 public:
  MetricsWriter() = default;
  explicit MetricsWriter(const std::string& path);

  bool is_open() const { return out_.is_open(); }
  void append(const MetricsRow& row);

 private:
  std::ofstream out_;
};

}  // namespace hyperpp
