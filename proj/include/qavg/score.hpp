#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace qavg::score {

/// Central interval of level 1 - alpha between the alpha/2 and 1 - alpha/2 quantiles.
struct IntervalLevel {
  double alpha = 0.05;

  double lower_p() const { return alpha / 2.0; }
  double upper_p() const { return 1.0 - alpha / 2.0; }
  double coverage() const { return 1.0 - alpha; }
};

/// alpha = 0.01, 0.025, 0.05, 0.10, 0.20.
std::vector<IntervalLevel> default_levels();

/// Fraction of y inside the closed interval. Crossed intervals count as misses.
double coverage_probability(std::span<const double> lower, std::span<const double> upper, std::span<const double> y);

/// Mean of upper - lower, negative widths included as they are.
double average_width(std::span<const double> lower, std::span<const double> upper);

/// Mean Winkler score (u - l) + (2/alpha)(l - y)[y < l] + (2/alpha)(y - u)[y > u].
double average_interval_score(std::span<const double> lower, std::span<const double> upper, std::span<const double> y,
                              double alpha);

/// (benchmark - candidate) / benchmark.
double relative_improvement(double ais_candidate, double ais_benchmark);

struct IntervalMetrics {
  double alpha = 0.0;
  double cp = 0.0;
  double aw = 0.0;
  double ais = 0.0;
  std::size_t crossings = 0;  // time steps with lower > upper
};

/// CP, AW and AIS from one pass over the series.
IntervalMetrics interval_metrics(std::span<const double> lower, std::span<const double> upper,
                                 std::span<const double> y, double alpha);

struct WisdomDiagnostics {
  double mean_ri = 0.0;
  std::vector<double> ri;  // ensemble against each sister
};

WisdomDiagnostics wisdom_diagnostics(std::span<const double> per_sister_ais, double ensemble_ais);

/// One line of the metrics table. level is the interval coverage 1 - alpha.
struct MetricRow {
  std::string metric;  // CP, AW or AIS
  std::string scheme;
  double level = 0.0;
  double value = 0.0;

  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

/// Header metric,scheme,level,value.
void write_metrics_csv(std::span<const MetricRow> rows, const std::filesystem::path& path);
void write_metrics_csv(std::span<const MetricRow> rows, std::ostream& out);
std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);

/// Appends CP, AW and AIS rows for m under scheme.
void append_rows(std::vector<MetricRow>& rows, const std::string& scheme, const IntervalMetrics& m);

}  // namespace qavg::score
