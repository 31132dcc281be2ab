#include "hyperpp/metrics.hpp"

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hyperpp {

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

std::array<double*, 11> float_fields(MetricsRow& r) {
  return {&r.mean_return,           &r.entropy,           &r.entropy_variance, &r.update_kl,
          &r.clip_fraction,         &r.mean_conformal_factor, &r.max_embedding_norm,
          &r.fc_grad_norm,          &r.actor_grad_norm,   &r.value_loss,       &r.policy_loss};
}

std::array<const double*, 11> float_fields(const MetricsRow& r) {
  return {&r.mean_return,           &r.entropy,           &r.entropy_variance, &r.update_kl,
          &r.clip_fraction,         &r.mean_conformal_factor, &r.max_embedding_norm,
          &r.fc_grad_norm,          &r.actor_grad_norm,   &r.value_loss,       &r.policy_loss};
}

}  // namespace

std::string metrics_header() {
  std::string h;
  for (std::size_t i = 0; i < kMetricsColumns.size(); ++i) {
    if (i) h += ',';
    h += kMetricsColumns[i];
  }
  return h;
}

std::string format_metrics_row(const MetricsRow& row) {
  std::string out = std::to_string(row.step);
  for (const double* f : float_fields(row)) {
    out += ',';
    append_double(out, *f);
  }
  return out;
}

std::vector<MetricsRow> parse_metrics_csv(std::string_view text, const std::string& source) {
  std::vector<MetricsRow> rows;
  long line_no = 0;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!saw_header) {
      if (line != metrics_header()) throw ParseError(source, line_no, "unexpected header");
      saw_header = true;
      continue;
    }
    if (line.empty()) continue;

    std::vector<std::string_view> cells;
    std::size_t p = 0;
    while (true) {
      const std::size_t q = line.find(',', p);
      cells.push_back(line.substr(p, q == std::string_view::npos ? std::string_view::npos : q - p));
      if (q == std::string_view::npos) break;
      p = q + 1;
    }
    if (cells.size() != kMetricsColumns.size()) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(kMetricsColumns.size()) + " fields, got " +
                           std::to_string(cells.size()));
    }
    MetricsRow row;
    auto parse = [&](std::string_view cell, auto& target, std::string_view column) {
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), target);
      if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
        throw ParseError(source, line_no, "bad value '" + std::string(cell) + "' in column " +
                                              std::string(column));
      }
    };
    parse(cells[0], row.step, kMetricsColumns[0]);
    auto fields = float_fields(row);
    for (std::size_t i = 0; i < fields.size(); ++i) parse(cells[i + 1], *fields[i], kMetricsColumns[i + 1]);
    rows.push_back(row);
  }
  if (!saw_header) throw ParseError(source, 1, "empty file");
  return rows;
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path, 0, "cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_metrics_csv(ss.str(), path);
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open metrics file " + path);
  out_ << metrics_header() << '\n';
  out_.flush();
}

void MetricsWriter::append(const MetricsRow& row) {
  out_ << format_metrics_row(row) << '\n';
  out_.flush();
}

}  // namespace hyperpp
