#include "qavg/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qavg/csv.hpp"
#include "qavg/error.hpp"
#include "qavg/kernels.hpp"
#include "qavg/normal.hpp"
#include "qavg/parallel.hpp"
#include "qavg/rng.hpp"

namespace qavg::ensemble {

namespace {

constexpr double kGridTolerance = 1e-12;

// Sisters per reduction block. Fixed so the summation order, and hence the
// averaged surface, does not depend on the thread count.
constexpr std::size_t kBlock = 16;

template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e);
  }
}

}  // namespace

int EnsembleScheme::number() const {
  return static_cast<int>(variant) + (error_model == ErrorModel::QuantileRegression ? 3 : 0);
}

std::string EnsembleScheme::name() const { return "ensemble_" + std::to_string(number()); }

EnsembleScheme EnsembleScheme::from_number(int n) {
  if (n < 1 || n > 6) throw ConfigError("ensemble scheme must be 1-6, got " + std::to_string(n));
  return {static_cast<Variant>((n - 1) % 3 + 1), n > 3 ? ErrorModel::QuantileRegression : ErrorModel::LinearRegression};
}

std::vector<EnsembleScheme> EnsembleScheme::all() {
  std::vector<EnsembleScheme> v;
  for (int n = 1; n <= 6; ++n) v.push_back(from_number(n));
  return v;
}

std::vector<double> default_probabilities() {
  return {0.005, 0.0125, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.9875, 0.995};
}

namespace {

std::size_t find_probability(std::span<const double> probs, double p) {
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (std::fabs(probs[i] - p) <= kGridTolerance) return i;
  return probs.size();
}

}  // namespace

void validate_grid(std::span<const double> probs) {
  if (probs.empty()) throw ConfigError("probability grid is empty");
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!(probs[i] > 0.0 && probs[i] < 1.0)) throw ConfigError("grid probability outside (0, 1)");
    if (i > 0 && !(probs[i] > probs[i - 1])) throw ConfigError("probability grid must be strictly increasing");
    if (find_probability(probs, 1.0 - probs[i]) == probs.size()) {
      throw ConfigError("probability grid lacks " + csv::format_short(1.0 - probs[i]) + ", the reflection of " +
                        csv::format_short(probs[i]));
    }
  }
}

SisterMatrix::SisterMatrix(std::size_t m, std::size_t n2, std::size_t n3)
    : m_(m), n2_(n2), n3_(n3), values_(m * (n2 + n3)) {}

QuantileSurface::QuantileSurface(std::vector<double> probs, std::size_t n)
    : probabilities(std::move(probs)), n3(n), values(probabilities.size() * n, 0.0) {}

std::size_t QuantileSurface::index_of(double p) const {
  const std::size_t i = find_probability(probabilities, p);
  if (i == probabilities.size()) throw ConfigError("probability " + csv::format_short(p) + " is not on the grid");
  return i;
}

std::span<const double> QuantileSurface::at(double p) const { return row(index_of(p)); }

std::size_t QuantileSurface::crossings() const {
  std::size_t c = 0;
  for (std::size_t i = 1; i < probabilities.size(); ++i) {
    const auto lo = row(i - 1), hi = row(i);
    for (std::size_t t = 0; t < n3; ++t) c += lo[t] > hi[t];
  }
  return c;
}

score::IntervalMetrics QuantileSurface::score(std::span<const double> y, const score::IntervalLevel& level) const {
  return score::interval_metrics(at(level.lower_p()), at(level.upper_p()), y, level.alpha);
}

SisterMatrix make_sister_predictions(const bayes::PosteriorDraws& draws, std::span<const double> x_t23,
                                     std::size_t n2, DesignKind design) {
  if (draws.m() == 0) throw InsufficientDataError("make_sister_predictions: no parameter draws");
  if (x_t23.empty()) throw InsufficientDataError("make_sister_predictions: empty predictor series");
  if (n2 > x_t23.size()) throw ShapeError("make_sister_predictions: T2 longer than the series");
  if (draws.k != regress::coefficient_count(design)) throw ShapeError("make_sister_predictions: design mismatch");
  SisterMatrix s(draws.m(), n2, x_t23.size() - n2);
  for (std::size_t k = 0; k < draws.m(); ++k) kernels::design_eval(x_t23, draws.row(k), s.row(k));
  return s;
}

ErrorMatrix compute_errors(const SisterMatrix& sisters, std::span<const double> y_t2) {
  if (y_t2.size() != sisters.n2()) {
    throw ShapeError("compute_errors: T2 holds " + std::to_string(sisters.n2()) + " steps but y has " +
                     std::to_string(y_t2.size()));
  }
  ErrorMatrix e(sisters.m(), sisters.n2());
  for (std::size_t k = 0; k < sisters.m(); ++k) kernels::difference(sisters.t2(k), y_t2, e.row(k));
  return e;
}

namespace {

ErrorQuantileModel fit_error_model(std::span<const double> zeta, std::span<const double> eps, ErrorModel model,
                                   std::span<const double> probs, const regress::QrOptions& qr) {
  ErrorQuantileModel out;
  out.intercept.resize(probs.size());
  out.slope.resize(probs.size());
  if (model == ErrorModel::LinearRegression) {
    const auto fit = regress::ols_fit(zeta, eps, DesignKind::Linear);
    const double sd = std::sqrt(fit.mse);
    for (std::size_t i = 0; i < probs.size(); ++i) {
      out.intercept[i] = fit.coefficients[0] + regress::inv_norm_cdf(probs[i]) * sd;
      out.slope[i] = fit.coefficients[1];
    }
  } else {
    for (std::size_t i = 0; i < probs.size(); ++i) {
      const auto fit = regress::qr_fit(zeta, eps, probs[i], DesignKind::Linear, qr);
      out.intercept[i] = fit.coefficients[0];
      out.slope[i] = fit.coefficients[1];
    }
  }
  return out;
}

template <class F>
auto for_sister(std::size_t k, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SingularityError& e) {
    throw SingularityError("sister " + std::to_string(k + 1) + ": " + e.what());
  }
}

}  // namespace

TrainedErrorModels train_error_models(Variant variant, const SisterMatrix& sisters, const ErrorMatrix& errors,
                                      ErrorModel model, std::span<const double> probabilities, std::size_t k0,
                                      const TrainingOptions& options) {
  validate_grid(probabilities);
  if (errors.m() != sisters.m() || errors.n2() != sisters.n2()) {
    throw ShapeError("train_error_models: sister and error matrices disagree in shape");
  }
  const std::size_t m = sisters.m();
  if (m == 0) throw InsufficientDataError("train_error_models: no sisters");

  TrainedErrorModels out{variant, model, {probabilities.begin(), probabilities.end()}, {}, 0};
  switch (variant) {
    case Variant::PerSister: {
      out.models.resize(m);
      parallel_for(m, options.threads, [&](std::size_t k) {
        out.models[k] = for_sister(k, [&] {
          return fit_error_model(sisters.t2(k), errors.row(k), model, probabilities, options.qr);
        });
      });
      break;
    }
    case Variant::Pooled: {
      const std::size_t n2 = sisters.n2();
      std::vector<double> zeta(m * n2), eps(m * n2);
      for (std::size_t k = 0; k < m; ++k) {
        std::copy_n(sisters.t2(k).begin(), n2, zeta.begin() + static_cast<std::ptrdiff_t>(k * n2));
        std::copy_n(errors.row(k).begin(), n2, eps.begin() + static_cast<std::ptrdiff_t>(k * n2));
      }
      out.models.push_back(fit_error_model(zeta, eps, model, probabilities, options.qr));
      break;
    }
    case Variant::SingleRandom: {
      if (k0 >= m) throw ConfigError("train_error_models: k0 outside the ensemble");
      out.k0 = k0;
      out.models.push_back(
          for_sister(k0, [&] { return fit_error_model(sisters.t2(k0), errors.row(k0), model, probabilities, options.qr); }));
      break;
    }
  }
  return out;
}

std::size_t draw_k0(std::uint64_t seed, std::size_t m) {
  if (m == 0) throw ConfigError("draw_k0: empty ensemble");
  Rng rng(seed, "variant3/k0");
  return static_cast<std::size_t>(rng.below(m));
}

void predict_sister_surface(const TrainedErrorModels& trained, const SisterMatrix& sisters, std::size_t k,
                            QuantileSurface& out) {
  const auto& probs = trained.probabilities;
  const auto& model = trained.for_sister(k);
  const auto zeta = sisters.t3(k);
  if (out.probabilities.size() != probs.size() || out.n3 != zeta.size()) {
    throw ShapeError("predict_sister_surface: output surface has the wrong shape");
  }
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const std::size_t j = find_probability(probs, 1.0 - probs[i]);
    if (j == probs.size()) throw ConfigError("probability grid lacks the reflection of " + csv::format_short(probs[i]));
    // zeta - (a + b zeta) written as (1 - b) zeta - a.
    kernels::affine(zeta, 1.0 - model.slope[j], -model.intercept[j], out.row(i));
  }
}

std::vector<QuantileSurface> predict_auxiliary_quantiles(const TrainedErrorModels& trained,
                                                         const SisterMatrix& sisters) {
  if (trained.models.size() != 1 && trained.models.size() != sisters.m()) {
    throw ShapeError("predict_auxiliary_quantiles: trained set does not match the ensemble");
  }
  std::vector<QuantileSurface> out;
  out.reserve(sisters.m());
  for (std::size_t k = 0; k < sisters.m(); ++k) {
    out.emplace_back(trained.probabilities, sisters.n3());
    predict_sister_surface(trained, sisters, k, out.back());
  }
  return out;
}

QuantileSurface average_quantiles(std::span<const QuantileSurface> surfaces) {
  if (surfaces.empty()) throw ShapeError("average_quantiles: no surfaces");
  QuantileSurface acc(surfaces[0].probabilities, surfaces[0].n3);
  for (const auto& s : surfaces) {
    if (s.n3 != acc.n3 || s.probabilities.size() != acc.probabilities.size()) {
      throw ShapeError("average_quantiles: surfaces differ in shape");
    }
    for (std::size_t i = 0; i < s.probabilities.size(); ++i) {
      if (std::fabs(s.probabilities[i] - acc.probabilities[i]) > kGridTolerance) {
        throw ShapeError("average_quantiles: surfaces use different probability grids");
      }
    }
    kernels::affine_accumulate(s.values, 1.0, 0.0, acc.values);
  }
  const double m = static_cast<double>(surfaces.size());
  for (double& v : acc.values) v /= m;
  return acc;
}

PreparedEnsemble prepare_ensemble(const simulate::ToyDataset& data, DesignKind design, std::uint64_t seed,
                                  const PrepareOptions& options) {
  const auto& split = data.split;
  if (split.total() != data.size() || split.n1 == 0 || split.n2 == 0 || split.n3 == 0) {
    throw ConfigError("prepare_ensemble: every period needs at least one time step");
  }
  PreparedEnsemble p;
  p.design = design;
  p.seed = seed;
  p.draws = staged("gibbs_sample", [&] {
    return bayes::gibbs_sample(data.x_t1(), data.y_t1(), design, {options.m, options.burn_in, seed});
  });
  p.sisters = staged("make_sister_predictions",
                     [&] { return make_sister_predictions(p.draws, data.x_t23(), split.n2, design); });
  p.errors = staged("compute_errors", [&] { return compute_errors(p.sisters, data.y_t2()); });
  p.y_t3.assign(data.y_t3().begin(), data.y_t3().end());
  return p;
}

SchemeResult run_scheme_on(const EnsembleScheme& scheme, const PreparedEnsemble& prepared,
                           const SchemeOptions& options) {
  const auto& sisters = prepared.sisters;
  const std::size_t m = sisters.m();
  const std::size_t n3 = sisters.n3();
  if (prepared.y_t3.size() != n3) throw ShapeError("run_scheme_on: T3 truth does not match the sisters");

  SchemeResult result;
  result.scheme = scheme;
  result.k0 = scheme.variant == Variant::SingleRandom ? draw_k0(prepared.seed, m) : 0;

  const auto trained = staged("train_error_models", [&] {
    return train_error_models(scheme.variant, sisters, prepared.errors, scheme.error_model, options.probabilities,
                              result.k0, options.training);
  });

  const std::size_t n_levels = options.levels.size();
  result.per_sister_ais.assign(n_levels, std::vector<double>(m, 0.0));
  const std::size_t blocks = (m + kBlock - 1) / kBlock;
  std::vector<QuantileSurface> partial(blocks);
  if (options.retain_per_sister) result.per_sister.resize(m);

  staged("predict_auxiliary_quantiles", [&] {
    // Level bounds are looked up once so a bad level fails before any work.
    std::vector<std::pair<std::size_t, std::size_t>> bounds;
    const QuantileSurface probe(trained.probabilities, 0);
    for (const auto& lv : options.levels) bounds.emplace_back(probe.index_of(lv.lower_p()), probe.index_of(lv.upper_p()));

    parallel_for(blocks, options.training.threads, [&](std::size_t b) {
      QuantileSurface acc(trained.probabilities, n3);
      QuantileSurface z(trained.probabilities, n3);
      const std::size_t end = std::min(m, (b + 1) * kBlock);
      for (std::size_t k = b * kBlock; k < end; ++k) {
        predict_sister_surface(trained, sisters, k, z);
        for (std::size_t l = 0; l < n_levels; ++l) {
          result.per_sister_ais[l][k] =
              score::interval_metrics(z.row(bounds[l].first), z.row(bounds[l].second), prepared.y_t3,
                                      options.levels[l].alpha)
                  .ais;
        }
        kernels::affine_accumulate(z.values, 1.0, 0.0, acc.values);
        if (options.retain_per_sister) result.per_sister[k] = z;
      }
      partial[b] = std::move(acc);
    });
  });

  result.final = staged("average_quantiles", [&] {
    QuantileSurface total = std::move(partial[0]);
    for (std::size_t b = 1; b < blocks; ++b) kernels::affine_accumulate(partial[b].values, 1.0, 0.0, total.values);
    const double md = static_cast<double>(m);
    for (double& v : total.values) v /= md;
    return total;
  });
  result.grid_crossings = result.final.crossings();
  return result;
}

SchemeResult run_scheme(const EnsembleScheme& scheme, const simulate::ToyDataset& data, DesignKind design,
                        std::size_t m, std::uint64_t seed, const SchemeOptions& options) {
  const auto prepared = prepare_ensemble(data, design, seed, {.m = m});
  return run_scheme_on(scheme, prepared, options);
}

void write_surface_csv(const QuantileSurface& s, const std::filesystem::path& path, std::size_t first_t) {
  auto out = csv::open_output(path);
  std::vector<std::string> fields{"t"};
  for (double p : s.probabilities) fields.push_back("p_" + csv::format_short(p));
  csv::write_row(out, fields);
  for (std::size_t t = 0; t < s.n3; ++t) {
    fields.assign({std::to_string(first_t + t)});
    for (std::size_t i = 0; i < s.probabilities.size(); ++i) fields.push_back(csv::format_double(s.row(i)[t]));
    csv::write_row(out, fields);
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

SurfaceFile read_surface_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const std::size_t ct = table.column("t");
  std::vector<double> probs;
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto& h = table.header[c];
    if (h.rfind("p_", 0) == 0) {
      probs.push_back(csv::parse_double(std::string_view(h).substr(2)));
      cols.push_back(c);
    }
  }
  if (probs.empty()) throw IoError(path.string() + ": no p_<probability> columns");
  SurfaceFile f{QuantileSurface(probs, table.rows.size()), {}};
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    f.t.push_back(static_cast<std::size_t>(csv::parse_double(table.rows[r][ct])));
    for (std::size_t i = 0; i < cols.size(); ++i) f.surface.row(i)[r] = csv::parse_double(table.rows[r][cols[i]]);
  }
  return f;
}

}  // namespace qavg::ensemble
