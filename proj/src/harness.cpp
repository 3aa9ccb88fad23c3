#include "qavg/harness.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <thread>

#include "json.hpp"
#include "qavg/bayes.hpp"
#include "qavg/csv.hpp"
#include "qavg/error.hpp"
#include "qavg/kernels.hpp"
#include "qavg/parallel.hpp"
#include "qavg/rng.hpp"

#ifndef QAVG_VERSION
#define QAVG_VERSION "0.0.0"
#endif

namespace qavg::harness {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view version() { return QAVG_VERSION; }

std::string_view to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::Toy1Exp: return "toy1";
    case ExperimentId::Toy2Exp: return "toy2";
    case ExperimentId::Toy3Exp: return "toy3";
    case ExperimentId::Toy4Exp: return "toy4";
    case ExperimentId::AddType1: return "add1";
    case ExperimentId::AddType2: return "add2";
  }
  return "?";
}

std::vector<ExperimentId> all_experiments() {
  return {ExperimentId::Toy1Exp, ExperimentId::Toy2Exp,  ExperimentId::Toy3Exp,
          ExperimentId::Toy4Exp, ExperimentId::AddType1, ExperimentId::AddType2};
}

ExperimentId experiment_from_string(std::string_view name) {
  for (ExperimentId id : all_experiments())
    if (name == to_string(id)) return id;
  throw ConfigError("unknown experiment '" + std::string(name) + "' (expected toy1..toy4, add1, add2)");
}

std::string_view table_name(ExperimentId id) {
  switch (id) {
    case ExperimentId::Toy1Exp: return "table4";
    case ExperimentId::Toy2Exp: return "table5";
    case ExperimentId::Toy3Exp: return "table6";
    case ExperimentId::Toy4Exp: return "table7";
    case ExperimentId::AddType1: return "tableD1";
    case ExperimentId::AddType2: return "tableD2";
  }
  return "?";
}

std::string_view to_string(Benchmark b) {
  switch (b) {
    case Benchmark::BayesianNonRegression: return "bayesian_nonregression";
    case Benchmark::BayesianRegression: return "bayesian_regression";
    case Benchmark::LinearRegression: return "linear_regression";
    case Benchmark::QuantileRegression: return "quantile_regression";
  }
  return "?";
}

Scale scale_from_string(std::string_view name) {
  if (name == "full") return Scale::Full;
  if (name == "desk") return Scale::Desk;
  throw ConfigError("unknown scale '" + std::string(name) + "' (expected full or desk)");
}

// ---------------------------------------------------------------------------
// Spec

ExperimentSpec ExperimentSpec::defaults(ExperimentId id) {
  ExperimentSpec s;
  s.id = id;
  switch (id) {
    case ExperimentId::Toy1Exp: s.family = Family::Toy1; break;
    // Toy experiment 2 reference results follow the squared reading of the noise law.
    case ExperimentId::Toy2Exp: s.family = Family::Toy2SdSquared; break;
    case ExperimentId::Toy3Exp: s.family = Family::Toy3; break;
    case ExperimentId::Toy4Exp:
      s.family = Family::Toy3;
      s.design = DesignKind::Quadratic;
      break;
    case ExperimentId::AddType1:
    case ExperimentId::AddType2:
      s.family = id == ExperimentId::AddType1 ? Family::Toy1 : Family::NonInformative;
      s.repetitions = 500;
      s.split = {100, 100, 100};
      break;
  }
  return s;
}

void ExperimentSpec::apply_scale(Scale s) {
  if (s == Scale::Full) return;
  m = std::min<std::size_t>(m, 200);
  if (repetitions > 1) repetitions = std::min<std::size_t>(repetitions, 50);
}

void ExperimentSpec::validate() const {
  const std::size_t k = regress::coefficient_count(design);
  if (m == 0) throw ConfigError("m must be positive");
  if (repetitions == 0) throw ConfigError("repetitions must be positive");
  if (split.n1 <= k) throw ConfigError("n1 must exceed the number of coefficients");
  if (split.n2 <= regress::coefficient_count(DesignKind::Linear)) throw ConfigError("n2 must exceed 2");
  if (split.n3 == 0) throw ConfigError("n3 must be positive");
  if (bench_draws == 0) throw ConfigError("bench_draws must be positive");
  if (qr.ipm_max_iterations == 0) throw ConfigError("ipm_max_iterations must be positive");
  if (id == ExperimentId::AddType2 && (nonreg_n < 2 || nonreg_n > split.n1 + split.n2)) {
    throw ConfigError("nonreg_n must lie in [2, n1 + n2]");
  }
}

std::vector<Benchmark> ExperimentSpec::benchmarks() const {
  switch (id) {
    case ExperimentId::Toy1Exp:
    case ExperimentId::AddType1:
      return {Benchmark::BayesianRegression, Benchmark::LinearRegression, Benchmark::QuantileRegression};
    case ExperimentId::AddType2:
      return {Benchmark::BayesianNonRegression, Benchmark::BayesianRegression, Benchmark::LinearRegression,
              Benchmark::QuantileRegression};
    default: return {Benchmark::LinearRegression, Benchmark::QuantileRegression};
  }
}

std::vector<std::string> scheme_order(const ExperimentSpec& spec) {
  std::vector<std::string> names;
  for (Benchmark b : spec.benchmarks()) names.emplace_back(to_string(b));
  for (const auto& s : ensemble::EnsembleScheme::all()) names.push_back(s.name());
  return names;
}

namespace {

std::size_t parse_count(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError("setting '" + key + "': expected a non-negative integer, got '" + value + "'");
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void apply_settings(ExperimentSpec& spec, const std::map<std::string, std::string>& settings) {
  // The experiment resets every default, and the scale shrinks whatever the
  // other keys set, so those two go first and last.
  if (auto it = settings.find("experiment"); it != settings.end()) {
    spec = ExperimentSpec::defaults(experiment_from_string(it->second));
  }
  for (const auto& [key, value] : settings) {
    if (key == "experiment" || key == "scale") continue;
    if (key == "family") spec.family = simulate::family_from_string(value);
    else if (key == "design") spec.design = regress::design_from_string(value);
    else if (key == "m") spec.m = parse_count(key, value);
    else if (key == "seed") spec.seed = parse_count(key, value);
    else if (key == "repetitions") spec.repetitions = parse_count(key, value);
    else if (key == "n1") spec.split.n1 = parse_count(key, value);
    else if (key == "n2") spec.split.n2 = parse_count(key, value);
    else if (key == "n3") spec.split.n3 = parse_count(key, value);
    else if (key == "burn_in") spec.burn_in = parse_count(key, value);
    else if (key == "bench_draws") spec.bench_draws = parse_count(key, value);
    else if (key == "nonreg_n") spec.nonreg_n = parse_count(key, value);
    else if (key == "threads") spec.threads = parse_count(key, value);
    else if (key == "qr_method") spec.qr.method = regress::qr_method_from_string(value);
    else if (key == "simplex_limit") spec.qr.simplex_limit = parse_count(key, value);
    else if (key == "ipm_max_iterations") spec.qr.ipm_max_iterations = parse_count(key, value);
    else if (key == "surface_dir") spec.surface_dir = value;
    else throw ConfigError("unknown setting '" + key + "'");
  }
  if (auto it = settings.find("scale"); it != settings.end()) spec.apply_scale(scale_from_string(it->second));
}

std::map<std::string, std::string> read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
    out[std::move(key)] = trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Benchmarks

ensemble::QuantileSurface run_benchmark(Benchmark b, const simulate::ToyDataset& data, DesignKind design,
                                        std::span<const double> probabilities, std::uint64_t seed,
                                        std::size_t draws, std::size_t nonreg_n, std::size_t threads,
                                        const regress::QrOptions& qr) {
  ensemble::validate_grid(probabilities);
  const auto x3 = data.x_t3();
  ensemble::QuantileSurface s({probabilities.begin(), probabilities.end()}, x3.size());
  const std::size_t np = probabilities.size();

  switch (b) {
    case Benchmark::LinearRegression: {
      const auto fit = regress::ols_fit(data.x_t12(), data.y_t12(), design);
      for (std::size_t i = 0; i < np; ++i)
        for (std::size_t t = 0; t < x3.size(); ++t) s.row(i)[t] = regress::ols_quantile(fit, x3[t], probabilities[i]);
      break;
    }
    case Benchmark::QuantileRegression: {
      for (std::size_t i = 0; i < np; ++i) {
        const auto fit = regress::qr_fit(data.x_t12(), data.y_t12(), probabilities[i], design, qr);
        for (std::size_t t = 0; t < x3.size(); ++t) s.row(i)[t] = regress::qr_predict(fit, x3[t]);
      }
      break;
    }
    case Benchmark::BayesianRegression: {
      const auto post = bayes::gibbs_sample(data.x_t12(), data.y_t12(), design, {draws, 100, seed});
      parallel_for(x3.size(), threads, [&](std::size_t t) {
        for (std::size_t i = 0; i < np; ++i)
          s.row(i)[t] = bayes::posterior_predictive_quantile(post, x3[t], probabilities[i], design);
      });
      break;
    }
    case Benchmark::BayesianNonRegression: {
      const auto y = data.y_t12();
      if (nonreg_n > y.size()) throw ConfigError("nonreg_n exceeds the T1 and T2 length");
      const auto fit = bayes::t_nonreg_fit(y.first(nonreg_n));
      for (std::size_t i = 0; i < np; ++i) {
        const double q = bayes::t_nonreg_quantile(fit, probabilities[i]);
        std::fill(s.row(i).begin(), s.row(i).end(), q);
      }
      break;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Runs

namespace {

struct Job {
  std::optional<Benchmark> bench;
  ensemble::EnsembleScheme scheme;
  std::string name;
};

struct JobResult {
  std::optional<SchemeOutcome> outcome;
  std::vector<WisdomRecord> wisdom;
  std::optional<Failure> failure;
};

Failure make_failure(std::size_t rep, const std::string& scheme, const std::exception& e, std::string stage) {
  if (const auto* se = dynamic_cast<const StageError*>(&e)) stage = se->stage();
  return {rep, scheme, std::move(stage), e.what()};
}

std::vector<score::IntervalMetrics> score_surface(const ensemble::QuantileSurface& s, std::span<const double> y) {
  std::vector<score::IntervalMetrics> out;
  for (const auto& lv : score::default_levels()) out.push_back(s.score(y, lv));
  return out;
}

RepetitionResult run_repetition(const ExperimentSpec& spec, std::size_t rep, bool parallel_jobs,
                                std::vector<Failure>& failures) {
  RepetitionResult result;
  result.index = rep;
  result.seed = Rng::derive_seed(spec.seed, "repetition/" + std::to_string(rep));
  const bool with_wisdom = spec.repetitions == 1;
  const std::size_t inner_threads = parallel_jobs ? spec.threads : 1;
  const auto probs = ensemble::default_probabilities();
  const auto levels = score::default_levels();

  const auto data = simulate::simulate({spec.family, spec.n(), result.seed}, spec.split);
  const bool keep_surfaces = with_wisdom && !spec.surface_dir.empty();
  const fs::path surface_dir = spec.surface_dir / std::string(to_string(spec.id));
  if (keep_surfaces) simulate::write_csv(data, surface_dir / "dataset.csv");
  auto save = [&](const std::string& name, const ensemble::QuantileSurface& surface) {
    if (keep_surfaces) {
      ensemble::write_surface_csv(surface, surface_dir / ("surface_" + name + ".csv"), spec.split.n1 + spec.split.n2 + 1);
    }
  };

  std::optional<ensemble::PreparedEnsemble> prepared;
  std::optional<Failure> prepare_failure;
  try {
    prepared = ensemble::prepare_ensemble(data, spec.design, result.seed, {spec.m, spec.burn_in});
  } catch (const std::exception& e) {
    prepare_failure = make_failure(rep, "", e, "prepare_ensemble");
  }

  std::vector<Job> jobs;
  for (Benchmark b : spec.benchmarks()) jobs.push_back({b, {}, std::string(to_string(b))});
  for (const auto& s : ensemble::EnsembleScheme::all()) jobs.push_back({std::nullopt, s, s.name()});

  std::vector<JobResult> slots(jobs.size());
  auto run_job = [&](std::size_t j) {
    const Job& job = jobs[j];
    JobResult& slot = slots[j];
    try {
      SchemeOutcome out;
      out.scheme = job.name;
      if (job.bench) {
        // Benchmarks always use the linear point model.
        const auto surface = run_benchmark(*job.bench, data, DesignKind::Linear, probs,
                                           Rng::derive_seed(result.seed, "benchmark/gibbs"), spec.bench_draws,
                                           spec.nonreg_n, inner_threads, spec.qr);
        out.levels = score_surface(surface, data.y_t3());
        out.grid_crossings = surface.crossings();
        save(job.name, surface);
      } else {
        if (!prepared) {
          slot.failure = *prepare_failure;
          slot.failure->scheme = job.name;
          return;
        }
        ensemble::SchemeOptions opts;
        opts.training.threads = inner_threads;
        opts.training.qr = spec.qr;
        const auto r = ensemble::run_scheme_on(job.scheme, *prepared, opts);
        out.levels = score_surface(r.final, prepared->y_t3);
        out.grid_crossings = r.grid_crossings;
        save(job.name, r.final);
        for (std::size_t l = 0; l < levels.size(); ++l) {
          const auto& sister = r.per_sister_ais[l];
          double sum = 0.0;
          for (double v : sister) sum += v;
          out.mean_sister_ais.push_back(sum / static_cast<double>(sister.size()));
          if (with_wisdom) {
            slot.wisdom.push_back({job.name, levels[l].coverage(), score::wisdom_diagnostics(sister, out.levels[l].ais)});
          }
        }
      }
      slot.outcome = std::move(out);
    } catch (const std::exception& e) {
      slot.failure = make_failure(rep, job.name, e, job.bench ? "benchmark" : "run_scheme");
    }
  };
  parallel_for(jobs.size(), parallel_jobs ? spec.threads : 1, run_job);

  for (auto& slot : slots) {
    if (slot.outcome) result.outcomes.push_back(std::move(*slot.outcome));
    if (slot.failure) failures.push_back(std::move(*slot.failure));
    for (auto& w : slot.wisdom) result.wisdom.push_back(std::move(w));
  }
  return result;
}

std::vector<AverageOutcome> average_outcomes(const ExperimentSpec& spec, const std::vector<RepetitionResult>& reps) {
  std::vector<AverageOutcome> out;
  const auto levels = score::default_levels();
  for (const auto& name : scheme_order(spec)) {
    AverageOutcome avg;
    avg.scheme = name;
    avg.levels.resize(levels.size());
    for (std::size_t l = 0; l < levels.size(); ++l) avg.levels[l].alpha = levels[l].alpha;
    for (const auto& rep : reps) {
      for (const auto& o : rep.outcomes) {
        if (o.scheme != name) continue;
        ++avg.count;
        for (std::size_t l = 0; l < levels.size(); ++l) {
          avg.levels[l].cp += o.levels[l].cp;
          avg.levels[l].aw += o.levels[l].aw;
          avg.levels[l].ais += o.levels[l].ais;
          avg.levels[l].crossings += o.levels[l].crossings;
        }
      }
    }
    if (avg.count == 0) continue;
    const double c = static_cast<double>(avg.count);
    for (auto& lv : avg.levels) {
      lv.cp /= c;
      lv.aw /= c;
      lv.ais /= c;
    }
    out.push_back(std::move(avg));
  }
  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentResult r;
  r.spec = spec;
  r.repetitions.resize(spec.repetitions);
  std::vector<std::vector<Failure>> failures(spec.repetitions);
  if (spec.repetitions == 1) {
    r.repetitions[0] = run_repetition(spec, 0, true, failures[0]);
  } else {
    parallel_for(spec.repetitions, spec.threads,
                 [&](std::size_t i) { r.repetitions[i] = run_repetition(spec, i, false, failures[i]); });
  }
  for (auto& f : failures) r.failures.insert(r.failures.end(), f.begin(), f.end());
  if (spec.repetitions > 1) r.averages = average_outcomes(spec, r.repetitions);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

const SchemeOutcome* ExperimentResult::find(std::string_view scheme, std::size_t repetition) const {
  if (repetition >= repetitions.size()) return nullptr;
  for (const auto& o : repetitions[repetition].outcomes)
    if (o.scheme == scheme) return &o;
  return nullptr;
}

const WisdomRecord* ExperimentResult::find_wisdom(std::string_view scheme, double level) const {
  if (repetitions.empty()) return nullptr;
  for (const auto& w : repetitions[0].wisdom)
    if (w.scheme == scheme && std::fabs(w.level - level) < 1e-12) return &w;
  return nullptr;
}

std::vector<score::MetricRow> ExperimentResult::table_rows() const {
  // (scheme, per-level metrics) in table order.
  std::vector<std::pair<std::string, const std::vector<score::IntervalMetrics>*>> source;
  if (spec.repetitions > 1) {
    for (const auto& a : averages) source.emplace_back(a.scheme, &a.levels);
  } else if (!repetitions.empty()) {
    for (const auto& o : repetitions[0].outcomes) source.emplace_back(o.scheme, &o.levels);
  }
  std::vector<score::MetricRow> rows;
  for (const char* metric : {"CP", "AW", "AIS"}) {
    for (const auto& [name, levels] : source) {
      for (const auto& m : *levels) {
        const double v = metric[0] == 'C' ? m.cp : (metric[1] == 'W' ? m.aw : m.ais);
        rows.push_back({metric, name, 1.0 - m.alpha, v});
      }
    }
  }
  return rows;
}

std::size_t ResultsBundle::failure_count() const {
  std::size_t n = 0;
  for (const auto& e : experiments) n += e.failures.size();
  return n;
}

const ExperimentResult* ResultsBundle::find(ExperimentId id) const {
  for (const auto& e : experiments)
    if (e.spec.id == id) return &e;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

void write_ri_csv(const ExperimentResult& exp, const std::string& scheme, const fs::path& path) {
  auto out = csv::open_output(path);
  csv::write_row(out, {"level", "sister", "ri"});
  for (const auto& w : exp.repetitions[0].wisdom) {
    if (w.scheme != scheme) continue;
    for (std::size_t k = 0; k < w.diagnostics.ri.size(); ++k) {
      csv::write_row(out, {csv::format_short(w.level), std::to_string(k + 1), csv::format_double(w.diagnostics.ri[k])});
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::string compiler_id() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

}  // namespace

ReportStatus emit_tables(const ResultsBundle& bundle, const fs::path& out_dir) {
  ReportStatus status;
  status.partial = bundle.experiments.empty() || bundle.failure_count() > 0;
  fs::create_directories(out_dir);
  for (const auto& exp : bundle.experiments) {
    const auto path = out_dir / (std::string(table_name(exp.spec.id)) + ".csv");
    const auto rows = exp.table_rows();
    score::write_metrics_csv(rows, path);
    status.written.push_back(path);
  }
  if (const auto* toy4 = bundle.find(ExperimentId::Toy4Exp); toy4 && !toy4->repetitions.empty()) {
    for (const auto& [scheme, file] : {std::pair{"ensemble_4", "fig7_ri.csv"}, std::pair{"ensemble_5", "fig8_ri.csv"}}) {
      if (!toy4->find_wisdom(scheme, score::default_levels()[0].coverage())) continue;
      write_ri_csv(*toy4, scheme, out_dir / file);
      status.written.push_back(out_dir / file);
    }
  }
  return status;
}

ReportStatus emit_reports(const ResultsBundle& bundle, const fs::path& out_dir) {
  auto status = emit_tables(bundle, out_dir);

  if (!bundle.experiments.empty()) {
    const auto bundle_path = out_dir / "bundle.json";
    write_bundle_json(bundle, bundle_path);
    status.written.push_back(bundle_path);
  }

  const auto manifest = out_dir / "run_manifest";
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw IoError("cannot write " + manifest.string());
  std::string ids;
  double total = 0.0;
  for (const auto& e : bundle.experiments) {
    ids += (ids.empty() ? "" : ",") + std::string(to_string(e.spec.id));
    total += e.wall_seconds;
  }
  out << "qavg_version=" << version() << '\n'
      << "compiler=" << compiler_id() << '\n'
      << "eigen_version=" << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << '\n'
      << "kernels=" << kernels::active().name << '\n'
      << "hardware_threads=" << std::thread::hardware_concurrency() << '\n'
      << "experiments=" << ids << '\n';
  for (const auto& e : bundle.experiments) {
    const std::string p(to_string(e.spec.id));
    out << p << ".family=" << simulate::to_string(e.spec.family) << '\n'
        << p << ".design=" << regress::to_string(e.spec.design) << '\n'
        << p << ".seed=" << e.spec.seed << '\n'
        << p << ".m=" << e.spec.m << '\n'
        << p << ".repetitions=" << e.spec.repetitions << '\n'
        << p << ".split=" << e.spec.split.n1 << '/' << e.spec.split.n2 << '/' << e.spec.split.n3 << '\n'
        << p << ".failures=" << e.failures.size() << '\n'
        << p << ".wall_seconds=" << csv::format_short(e.wall_seconds) << '\n';
  }
  out << "wall_seconds=" << csv::format_short(total) << '\n'
      << "status=" << (status.partial ? "partial" : "complete") << '\n';
  if (!out) throw IoError("write failed: " + manifest.string());
  status.written.push_back(manifest);
  return status;
}

// ---------------------------------------------------------------------------
// JSON bundle

namespace {

// Non-finite scores are legal outcomes; JSON has no literal for them.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double num(const json& j) {
  if (j.is_number()) return j.get<double>();
  const auto s = j.get<std::string>();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  throw IoError("bundle: bad number '" + s + "'");
}

json to_json(const std::vector<score::IntervalMetrics>& levels) {
  json a = json::array();
  for (const auto& m : levels)
    a.push_back({{"alpha", num(m.alpha)}, {"cp", num(m.cp)}, {"aw", num(m.aw)}, {"ais", num(m.ais)},
                 {"crossings", m.crossings}});
  return a;
}

std::vector<score::IntervalMetrics> metrics_from(const json& a) {
  std::vector<score::IntervalMetrics> out;
  for (const auto& j : a)
    out.push_back({num(j.at("alpha")), num(j.at("cp")), num(j.at("aw")), num(j.at("ais")),
                   j.at("crossings").get<std::size_t>()});
  return out;
}

json to_json(const ExperimentSpec& s) {
  return {{"id", to_string(s.id)},
          {"family", simulate::to_string(s.family)},
          {"design", regress::to_string(s.design)},
          {"m", s.m},
          {"seed", s.seed},
          {"repetitions", s.repetitions},
          {"n1", s.split.n1},
          {"n2", s.split.n2},
          {"n3", s.split.n3},
          {"burn_in", s.burn_in},
          {"bench_draws", s.bench_draws},
          {"nonreg_n", s.nonreg_n},
          {"threads", s.threads},
          {"qr_method", regress::to_string(s.qr.method)},
          {"simplex_limit", s.qr.simplex_limit},
          {"ipm_max_iterations", s.qr.ipm_max_iterations}};
}

ExperimentSpec spec_from(const json& j) {
  auto s = ExperimentSpec::defaults(experiment_from_string(j.at("id").get<std::string>()));
  s.family = simulate::family_from_string(j.at("family").get<std::string>());
  s.design = regress::design_from_string(j.at("design").get<std::string>());
  s.m = j.at("m").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.repetitions = j.at("repetitions").get<std::size_t>();
  s.split = {j.at("n1").get<std::size_t>(), j.at("n2").get<std::size_t>(), j.at("n3").get<std::size_t>()};
  s.burn_in = j.at("burn_in").get<std::size_t>();
  s.bench_draws = j.at("bench_draws").get<std::size_t>();
  s.nonreg_n = j.at("nonreg_n").get<std::size_t>();
  s.threads = j.at("threads").get<std::size_t>();
  s.qr.method = regress::qr_method_from_string(j.at("qr_method").get<std::string>());
  s.qr.simplex_limit = j.at("simplex_limit").get<std::size_t>();
  s.qr.ipm_max_iterations = j.at("ipm_max_iterations").get<std::size_t>();
  return s;
}

}  // namespace

void write_bundle_json(const ResultsBundle& bundle, const fs::path& path) {
  json root;
  root["qavg_version"] = version();
  json exps = json::array();
  for (const auto& e : bundle.experiments) {
    json je;
    je["spec"] = to_json(e.spec);
    je["wall_seconds"] = e.wall_seconds;
    json reps = json::array();
    for (const auto& r : e.repetitions) {
      json jr;
      jr["index"] = r.index;
      jr["seed"] = r.seed;
      json outs = json::array();
      for (const auto& o : r.outcomes) {
        json ms = json::array();
        for (double v : o.mean_sister_ais) ms.push_back(num(v));
        outs.push_back({{"scheme", o.scheme},
                        {"levels", to_json(o.levels)},
                        {"mean_sister_ais", ms},
                        {"grid_crossings", o.grid_crossings}});
      }
      jr["outcomes"] = std::move(outs);
      json wis = json::array();
      for (const auto& w : r.wisdom) {
        json ri = json::array();
        for (double v : w.diagnostics.ri) ri.push_back(num(v));
        wis.push_back({{"scheme", w.scheme}, {"level", w.level}, {"mean_ri", num(w.diagnostics.mean_ri)}, {"ri", ri}});
      }
      jr["wisdom"] = std::move(wis);
      reps.push_back(std::move(jr));
    }
    je["repetitions"] = std::move(reps);
    json avgs = json::array();
    for (const auto& a : e.averages) avgs.push_back({{"scheme", a.scheme}, {"count", a.count}, {"levels", to_json(a.levels)}});
    je["averages"] = std::move(avgs);
    json fails = json::array();
    for (const auto& f : e.failures)
      fails.push_back({{"repetition", f.repetition}, {"scheme", f.scheme}, {"stage", f.stage}, {"message", f.message}});
    je["failures"] = std::move(fails);
    exps.push_back(std::move(je));
  }
  root["experiments"] = std::move(exps);

  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << root.dump(1) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

ResultsBundle read_bundle_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open bundle " + path.string());
  ResultsBundle bundle;
  try {
    const json root = json::parse(in);
    for (const auto& je : root.at("experiments")) {
      ExperimentResult e;
      e.spec = spec_from(je.at("spec"));
      e.wall_seconds = je.at("wall_seconds").get<double>();
      for (const auto& jr : je.at("repetitions")) {
        RepetitionResult r;
        r.index = jr.at("index").get<std::size_t>();
        r.seed = jr.at("seed").get<std::uint64_t>();
        for (const auto& jo : jr.at("outcomes")) {
          SchemeOutcome o;
          o.scheme = jo.at("scheme").get<std::string>();
          o.levels = metrics_from(jo.at("levels"));
          for (const auto& v : jo.at("mean_sister_ais")) o.mean_sister_ais.push_back(num(v));
          o.grid_crossings = jo.at("grid_crossings").get<std::size_t>();
          r.outcomes.push_back(std::move(o));
        }
        for (const auto& jw : jr.at("wisdom")) {
          WisdomRecord w;
          w.scheme = jw.at("scheme").get<std::string>();
          w.level = jw.at("level").get<double>();
          w.diagnostics.mean_ri = num(jw.at("mean_ri"));
          for (const auto& v : jw.at("ri")) w.diagnostics.ri.push_back(num(v));
          r.wisdom.push_back(std::move(w));
        }
        e.repetitions.push_back(std::move(r));
      }
      for (const auto& ja : je.at("averages"))
        e.averages.push_back({ja.at("scheme").get<std::string>(), ja.at("count").get<std::size_t>(),
                              metrics_from(ja.at("levels"))});
      for (const auto& jf : je.at("failures"))
        e.failures.push_back({jf.at("repetition").get<std::size_t>(), jf.at("scheme").get<std::string>(),
                              jf.at("stage").get<std::string>(), jf.at("message").get<std::string>()});
      bundle.experiments.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw IoError("bundle " + path.string() + ": " + e.what());
  }
  return bundle;
}

}  // namespace qavg::harness
