#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qavg/bayes.hpp"
#include "qavg/regress.hpp"
#include "qavg/score.hpp"
#include "qavg/simulate.hpp"

namespace qavg::ensemble {

using regress::DesignKind;

enum class Variant { PerSister = 1, Pooled = 2, SingleRandom = 3 };
enum class ErrorModel { LinearRegression, QuantileRegression };

/// Variant x error model. Schemes 1-3 use linear regression error models with
/// variants 1-3, schemes 4-6 quantile regression with variants 1-3.
struct EnsembleScheme {
  Variant variant = Variant::PerSister;
  ErrorModel error_model = ErrorModel::LinearRegression;

  int number() const;
  std::string name() const;  // "ensemble_<number>"
  static EnsembleScheme from_number(int n);
  static std::vector<EnsembleScheme> all();

  friend bool operator==(const EnsembleScheme&, const EnsembleScheme&) = default;
};

/// 0.005, 0.0125, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.9875, 0.995.
std::vector<double> default_probabilities();

/// Throws ConfigError unless probs is strictly increasing inside (0, 1) and
/// closed under p -> 1 - p.
void validate_grid(std::span<const double> probs);

/// Point predictions of m sisters over T2 then T3, row-major m x (n2 + n3).
class SisterMatrix {
 public:
  SisterMatrix() = default;
  SisterMatrix(std::size_t m, std::size_t n2, std::size_t n3);

  std::size_t m() const { return m_; }
  std::size_t n2() const { return n2_; }
  std::size_t n3() const { return n3_; }
  std::size_t width() const { return n2_ + n3_; }

  std::span<double> row(std::size_t k) { return std::span(values_).subspan(k * width(), width()); }
  std::span<const double> row(std::size_t k) const { return std::span(values_).subspan(k * width(), width()); }
  std::span<const double> t2(std::size_t k) const { return row(k).first(n2_); }
  std::span<const double> t3(std::size_t k) const { return row(k).subspan(n2_); }

 private:
  std::size_t m_ = 0, n2_ = 0, n3_ = 0;
  std::vector<double> values_;
};

/// Sister prediction minus observation over T2, row-major m x n2.
class ErrorMatrix {
 public:
  ErrorMatrix() = default;
  ErrorMatrix(std::size_t m, std::size_t n2) : m_(m), n2_(n2), values_(m * n2) {}

  std::size_t m() const { return m_; }
  std::size_t n2() const { return n2_; }
  std::span<double> row(std::size_t k) { return std::span(values_).subspan(k * n2_, n2_); }
  std::span<const double> row(std::size_t k) const { return std::span(values_).subspan(k * n2_, n2_); }

 private:
  std::size_t m_ = 0, n2_ = 0;
  std::vector<double> values_;
};

/// Quantile predictions over T3, one row per probability.
struct QuantileSurface {
  std::vector<double> probabilities;
  std::size_t n3 = 0;
  std::vector<double> values;  // |probabilities| x n3, row-major

  QuantileSurface() = default;
  QuantileSurface(std::vector<double> probs, std::size_t n);

  std::span<double> row(std::size_t i) { return std::span(values).subspan(i * n3, n3); }
  std::span<const double> row(std::size_t i) const { return std::span(values).subspan(i * n3, n3); }
  /// Row of probability p; throws ConfigError when p is not on the grid.
  std::span<const double> at(double p) const;
  std::size_t index_of(double p) const;

  /// Time steps where a lower-probability quantile exceeds the next one up.
  std::size_t crossings() const;

  /// Central interval of the given level, read from the grid.
  score::IntervalMetrics score(std::span<const double> y, const score::IntervalLevel& level) const;
};

SisterMatrix make_sister_predictions(const bayes::PosteriorDraws& draws, std::span<const double> x_t23,
                                     std::size_t n2, DesignKind design);

/// errors[k][t] = sisters[k][t] - y_t2[t].
ErrorMatrix compute_errors(const SisterMatrix& sisters, std::span<const double> y_t2);

/// Error quantile lines e_p(zeta) = intercept[i] + slope[i] zeta, one per grid point.
struct ErrorQuantileModel {
  std::vector<double> intercept;
  std::vector<double> slope;
};

struct TrainedErrorModels {
  Variant variant = Variant::PerSister;
  ErrorModel error_model = ErrorModel::LinearRegression;
  std::vector<double> probabilities;
  std::vector<ErrorQuantileModel> models;  // m for PerSister, otherwise 1
  std::size_t k0 = 0;                      // sister used by SingleRandom

  /// Model applied to sister k.
  const ErrorQuantileModel& for_sister(std::size_t k) const { return models.size() == 1 ? models[0] : models[k]; }
};

struct TrainingOptions {
  regress::QrOptions qr{};
  std::size_t threads = 0;  // 0: one per hardware thread
};

/// Fits the error model of epsilon on zeta. PerSister trains one model per
/// row, Pooled one model on all m x n2 pairs (row-major order), SingleRandom
/// one model on row k0.
TrainedErrorModels train_error_models(Variant variant, const SisterMatrix& sisters, const ErrorMatrix& errors,
                                      ErrorModel model, std::span<const double> probabilities, std::size_t k0 = 0,
                                      const TrainingOptions& options = {});

/// Sister index for variant 3, from stream "variant3/k0" under seed.
std::size_t draw_k0(std::uint64_t seed, std::size_t m);

/// z_{p,k,t} = zeta_{k,t} - e_{1-p}(zeta_{k,t}) for every sister, over T3.
std::vector<QuantileSurface> predict_auxiliary_quantiles(const TrainedErrorModels& trained,
                                                         const SisterMatrix& sisters);

/// Writes sister k's auxiliary surface into out, which must already have the
/// trained grid and n3 columns.
void predict_sister_surface(const TrainedErrorModels& trained, const SisterMatrix& sisters, std::size_t k,
                            QuantileSurface& out);

/// Cell-wise arithmetic mean.
QuantileSurface average_quantiles(std::span<const QuantileSurface> surfaces);

/// Everything the six schemes share: posterior draws on T1, sisters over
/// T2 and T3, errors over T2 and the T3 truth.
struct PreparedEnsemble {
  DesignKind design = DesignKind::Linear;
  std::uint64_t seed = 0;
  bayes::PosteriorDraws draws;
  SisterMatrix sisters;
  ErrorMatrix errors;
  std::vector<double> y_t3;
};

struct PrepareOptions {
  std::size_t m = 1000;
  std::size_t burn_in = 100;
};

PreparedEnsemble prepare_ensemble(const simulate::ToyDataset& data, DesignKind design, std::uint64_t seed,
                                  const PrepareOptions& options = {});

struct SchemeOptions {
  std::vector<double> probabilities = default_probabilities();
  /// Levels at which each sister's own surface is scored; empty skips it.
  std::vector<score::IntervalLevel> levels = score::default_levels();
  bool retain_per_sister = false;
  TrainingOptions training;
};

struct SchemeResult {
  EnsembleScheme scheme;
  QuantileSurface final;
  std::vector<QuantileSurface> per_sister;  // only with retain_per_sister
  /// per_sister_ais[level][k]: AIS of sister k's own surface.
  std::vector<std::vector<double>> per_sister_ais;
  std::size_t k0 = 0;
  std::size_t grid_crossings = 0;  // crossings() of the final surface
};

/// Errors from a stage are rethrown as StageError naming the stage.
SchemeResult run_scheme_on(const EnsembleScheme& scheme, const PreparedEnsemble& prepared,
                           const SchemeOptions& options = {});

SchemeResult run_scheme(const EnsembleScheme& scheme, const simulate::ToyDataset& data, DesignKind design,
                        std::size_t m, std::uint64_t seed, const SchemeOptions& options = {});

/// Header t,p_<p>...; t counts from first_t.
void write_surface_csv(const QuantileSurface& s, const std::filesystem::path& path, std::size_t first_t = 1);

struct SurfaceFile {
  QuantileSurface surface;
  std::vector<std::size_t> t;
};
SurfaceFile read_surface_csv(const std::filesystem::path& path);

}  // namespace qavg::ensemble
