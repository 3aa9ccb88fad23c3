#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qavg/ensemble.hpp"
#include "qavg/regress.hpp"
#include "qavg/score.hpp"
#include "qavg/simulate.hpp"

namespace qavg::harness {

using regress::DesignKind;
using simulate::Family;
using simulate::PeriodSplit;

enum class ExperimentId { Toy1Exp, Toy2Exp, Toy3Exp, Toy4Exp, AddType1, AddType2 };

/// "toy1" ... "toy4", "add1", "add2".
std::string_view to_string(ExperimentId id);
ExperimentId experiment_from_string(std::string_view name);
std::vector<ExperimentId> all_experiments();

/// Report file stem of an experiment: table4 ... table7, tableD1, tableD2.
std::string_view table_name(ExperimentId id);

enum class Benchmark { BayesianNonRegression, BayesianRegression, LinearRegression, QuantileRegression };

/// "bayesian_nonregression", "bayesian_regression", "linear_regression", "quantile_regression".
std::string_view to_string(Benchmark b);

enum class Scale { Full, Desk };
Scale scale_from_string(std::string_view name);

struct ExperimentSpec {
  ExperimentId id = ExperimentId::Toy1Exp;
  Family family = Family::Toy1;
  DesignKind design = DesignKind::Linear;  // point model of the ensemble schemes
  std::size_t m = 1000;
  std::uint64_t seed = 1;
  std::size_t repetitions = 1;
  PeriodSplit split{1000, 1000, 10000};
  std::size_t burn_in = 100;
  std::size_t bench_draws = 1000;  // posterior draws of the Bayesian regression benchmark
  std::size_t nonreg_n = 200;      // leading points fitted by the non-regression benchmark
  std::size_t threads = 0;         // 0: one per hardware thread
  regress::QrOptions qr{};         // every quantile regression fit of the run
  /// When set, single-repetition runs write dataset.csv and one
  /// surface_<scheme>.csv per scheme under surface_dir/<experiment>.
  std::filesystem::path surface_dir;

  /// Reference settings of an experiment at full scale.
  static ExperimentSpec defaults(ExperimentId id);

  /// Shrinks m and the repetition count for quick runs.
  void apply_scale(Scale s);

  /// Throws ConfigError on inconsistent settings.
  void validate() const;

  /// Benchmarks reported alongside the ensemble schemes, in table order.
  std::vector<Benchmark> benchmarks() const;

  std::size_t n() const { return split.total(); }
};

/// Applies key=value settings to spec. Unknown keys or bad values throw ConfigError.
/// Recognized keys: experiment, family, design, m, seed, repetitions, n1, n2,
/// n3, burn_in, bench_draws, nonreg_n, threads, qr_method, simplex_limit,
/// ipm_max_iterations, surface_dir, scale.
void apply_settings(ExperimentSpec& spec, const std::map<std::string, std::string>& settings);

/// Parses a key=value file; '#' starts a comment, blank lines are skipped.
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

/// Builds a quantile surface over T3 from a model trained on T1 and T2.
/// For BayesianRegression, seed keys the Gibbs sampler.
ensemble::QuantileSurface run_benchmark(Benchmark b, const simulate::ToyDataset& data, DesignKind design,
                                        std::span<const double> probabilities, std::uint64_t seed = 1,
                                        std::size_t draws = 1000, std::size_t nonreg_n = 200,
                                        std::size_t threads = 0, const regress::QrOptions& qr = {});

/// Metrics of one scheme (ensemble or benchmark) in one repetition.
struct SchemeOutcome {
  std::string scheme;
  std::vector<score::IntervalMetrics> levels;  // default_levels() order
  /// Mean over sisters of each sister's own AIS, per level; ensemble schemes only.
  std::vector<double> mean_sister_ais;
  std::size_t grid_crossings = 0;
};

struct Failure {
  std::size_t repetition = 0;
  std::string scheme;
  std::string stage;
  std::string message;
};

/// Ensemble against each sister for one scheme and level.
struct WisdomRecord {
  std::string scheme;
  double level = 0.0;
  score::WisdomDiagnostics diagnostics;
};

struct RepetitionResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<SchemeOutcome> outcomes;  // successful schemes only, table order
  std::vector<WisdomRecord> wisdom;     // single-repetition experiments only
};

/// Per-scheme mean over the repetitions in which the scheme succeeded.
struct AverageOutcome {
  std::string scheme;
  std::size_t count = 0;
  std::vector<score::IntervalMetrics> levels;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<RepetitionResult> repetitions;
  std::vector<AverageOutcome> averages;
  std::vector<Failure> failures;
  double wall_seconds = 0.0;

  /// Table rows: averages for repetition studies, the single repetition otherwise.
  std::vector<score::MetricRow> table_rows() const;
  const SchemeOutcome* find(std::string_view scheme, std::size_t repetition = 0) const;
  const WisdomRecord* find_wisdom(std::string_view scheme, double level) const;
};

struct ResultsBundle {
  std::vector<ExperimentResult> experiments;

  std::size_t failure_count() const;
  const ExperimentResult* find(ExperimentId id) const;
};

/// Scheme names in table order: benchmarks first, then ensemble_1 ... ensemble_6.
std::vector<std::string> scheme_order(const ExperimentSpec& spec);

/// Runs every repetition of the experiment. Scheme failures are recorded and
/// the remaining schemes still run.
ExperimentResult run_experiment(const ExperimentSpec& spec);

struct ReportStatus {
  std::vector<std::filesystem::path> written;
  bool partial = false;  // empty bundle or recorded failures
};

/// Writes the tables present in the bundle, fig7_ri.csv and fig8_ri.csv when
/// toy experiment 4 carries wisdom data, bundle.json and run_manifest.
ReportStatus emit_reports(const ResultsBundle& bundle, const std::filesystem::path& out_dir);

/// Metric tables and figure data only, as regenerated by `report`.
ReportStatus emit_tables(const ResultsBundle& bundle, const std::filesystem::path& out_dir);

void write_bundle_json(const ResultsBundle& bundle, const std::filesystem::path& path);
ResultsBundle read_bundle_json(const std::filesystem::path& path);

/// Library version string.
std::string_view version();

}  // namespace qavg::harness
