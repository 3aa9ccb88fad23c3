#include "qavg/score.hpp"

#include <cmath>

#include "qavg/csv.hpp"
#include "qavg/error.hpp"
#include "qavg/kernels.hpp"

namespace qavg::score {

std::vector<IntervalLevel> default_levels() { return {{0.01}, {0.025}, {0.05}, {0.10}, {0.20}}; }

namespace {

kernels::IntervalSums checked_sums(std::span<const double> lower, std::span<const double> upper,
                                   std::span<const double> y, const char* what) {
  if (lower.empty()) throw DomainError(std::string(what) + ": empty series");
  return kernels::interval_sums(lower, upper, y);
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

}  // namespace

double coverage_probability(std::span<const double> lower, std::span<const double> upper, std::span<const double> y) {
  const auto s = checked_sums(lower, upper, y, "coverage_probability");
  return static_cast<double>(s.covered) / static_cast<double>(lower.size());
}

double average_width(std::span<const double> lower, std::span<const double> upper) {
  if (lower.empty()) throw DomainError("average_width: empty series");
  if (lower.size() != upper.size()) throw ShapeError("average_width: length mismatch");
  // y = lower keeps every point covered; only the width sum is read.
  const auto s = kernels::interval_sums(lower, upper, lower);
  return s.width / static_cast<double>(lower.size());
}

double average_interval_score(std::span<const double> lower, std::span<const double> upper, std::span<const double> y,
                              double alpha) {
  check_alpha(alpha);
  const auto s = checked_sums(lower, upper, y, "average_interval_score");
  return (s.width + (2.0 / alpha) * s.penalty) / static_cast<double>(lower.size());
}

double relative_improvement(double ais_candidate, double ais_benchmark) {
  if (!(ais_benchmark > 0.0)) throw DomainError("relative_improvement: benchmark score must be positive");
  return (ais_benchmark - ais_candidate) / ais_benchmark;
}

IntervalMetrics interval_metrics(std::span<const double> lower, std::span<const double> upper,
                                 std::span<const double> y, double alpha) {
  check_alpha(alpha);
  const auto s = checked_sums(lower, upper, y, "interval_metrics");
  const double n = static_cast<double>(lower.size());
  return {alpha, static_cast<double>(s.covered) / n, s.width / n, (s.width + (2.0 / alpha) * s.penalty) / n,
          s.crossings};
}

WisdomDiagnostics wisdom_diagnostics(std::span<const double> per_sister_ais, double ensemble_ais) {
  if (per_sister_ais.empty()) throw DomainError("wisdom_diagnostics: no sister scores");
  WisdomDiagnostics d;
  d.ri.reserve(per_sister_ais.size());
  double sum = 0.0;
  for (double a : per_sister_ais) {
    d.ri.push_back(relative_improvement(ensemble_ais, a));
    sum += d.ri.back();
  }
  d.mean_ri = sum / static_cast<double>(d.ri.size());
  return d;
}

void write_metrics_csv(std::span<const MetricRow> rows, std::ostream& out) {
  out << "metric,scheme,level,value\n";
  for (const auto& r : rows) csv::write_row(out, {r.metric, r.scheme, csv::format_short(r.level), csv::format_double(r.value)});
}

void write_metrics_csv(std::span<const MetricRow> rows, const std::filesystem::path& path) {
  auto out = csv::open_output(path);
  write_metrics_csv(rows, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path) {
  const auto t = csv::read(path);
  const std::size_t cm = t.column("metric"), cs = t.column("scheme"), cl = t.column("level"), cv = t.column("value");
  std::vector<MetricRow> rows;
  rows.reserve(t.rows.size());
  for (const auto& r : t.rows) rows.push_back({r[cm], r[cs], csv::parse_double(r[cl]), csv::parse_double(r[cv])});
  return rows;
}

void append_rows(std::vector<MetricRow>& rows, const std::string& scheme, const IntervalMetrics& m) {
  const double level = 1.0 - m.alpha;
  rows.push_back({"CP", scheme, level, m.cp});
  rows.push_back({"AW", scheme, level, m.aw});
  rows.push_back({"AIS", scheme, level, m.ais});
}

}  // namespace qavg::score
