// qavg: simulate toy data, run the experiments, score surfaces, regenerate reports.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qavg/csv.hpp"
#include "qavg/ensemble.hpp"
#include "qavg/error.hpp"
#include "qavg/harness.hpp"
#include "qavg/score.hpp"
#include "qavg/simulate.hpp"

namespace fs = std::filesystem;
using namespace qavg;

namespace {

constexpr int kOk = 0;
constexpr int kPartial = 1;
constexpr int kConfig = 2;

fs::path default_out_dir() {
  if (const char* env = std::getenv("QAVG_OUT_DIR"); env && *env) return env;
  return "qavg_out";
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

// Prints a table with one line per metric and scheme, levels across.
void print_table(const std::string& title, const std::vector<score::MetricRow>& rows) {
  std::printf("%s\n", title.c_str());
  std::string metric, scheme;
  for (const auto& r : rows) {
    if (r.metric != metric || r.scheme != scheme) {
      if (!metric.empty()) std::printf("\n");
      metric = r.metric;
      scheme = r.scheme;
      std::printf("  %-4s %-24s", metric.c_str(), scheme.c_str());
    }
    std::printf(" %7.3f", r.value);
  }
  std::printf("\n");
}

struct SimulateArgs {
  std::string family = "toy1";
  std::size_t n = 12000;
  std::uint64_t seed = 1;
  std::optional<std::size_t> n1, n2, n3;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto family = simulate::family_from_string(a.family);
  auto split = simulate::default_split(a.n);
  if (a.n1) split.n1 = *a.n1;
  if (a.n2) split.n2 = *a.n2;
  if (a.n3) split.n3 = *a.n3;
  const auto data = simulate::simulate({family, a.n, a.seed}, split);
  if (a.out == "-") {
    simulate::write_csv(data, std::cout);
    return kOk;
  }
  const fs::path path = a.out.empty() ? default_out_dir() / (std::string(simulate::to_string(family)) + "_seed" +
                                                            std::to_string(a.seed) + ".csv")
                                      : fs::path(a.out);
  simulate::write_csv(data, path);
  std::fprintf(stderr, "wrote %s\n", path.string().c_str());
  return kOk;
}

struct RunArgs {
  std::string experiments;
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::size_t> m, repetitions, threads;
  std::optional<std::uint64_t> seed;
  std::string scale;
  std::string out_dir;
};

int cmd_run(const RunArgs& a) {
  std::map<std::string, std::string> settings;
  if (!a.config.empty()) settings = harness::read_config(a.config);
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + kv + "'");
    settings[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  if (a.m) settings["m"] = std::to_string(*a.m);
  if (a.seed) settings["seed"] = std::to_string(*a.seed);
  if (a.repetitions) settings["repetitions"] = std::to_string(*a.repetitions);
  if (a.threads) settings["threads"] = std::to_string(*a.threads);
  if (!a.scale.empty()) settings["scale"] = a.scale;

  std::vector<harness::ExperimentId> ids;
  std::string which = a.experiments;
  if (which.empty()) {
    if (auto it = settings.find("experiment"); it != settings.end()) which = it->second;
  }
  if (which.empty()) throw ConfigError("no experiment given (use --experiment or an experiment= setting)");
  if (which == "all") {
    ids = harness::all_experiments();
  } else {
    for (const auto& name : split_list(which)) ids.push_back(harness::experiment_from_string(name));
  }

  // Every spec is validated before anything runs.
  std::vector<harness::ExperimentSpec> specs;
  for (auto id : ids) {
    auto s = harness::ExperimentSpec::defaults(id);
    auto kv = settings;
    kv["experiment"] = std::string(harness::to_string(id));
    harness::apply_settings(s, kv);
    s.validate();
    specs.push_back(s);
  }

  const fs::path out = a.out_dir.empty() ? default_out_dir() : fs::path(a.out_dir);
  harness::ResultsBundle bundle;
  for (const auto& s : specs) {
    std::fprintf(stderr, "running %s: m=%zu repetitions=%zu seed=%llu\n", std::string(harness::to_string(s.id)).c_str(),
                 s.m, s.repetitions, static_cast<unsigned long long>(s.seed));
    bundle.experiments.push_back(harness::run_experiment(s));
    const auto& r = bundle.experiments.back();
    std::fprintf(stderr, "  done in %.1fs, %zu failure(s)\n", r.wall_seconds, r.failures.size());
    for (const auto& f : r.failures)
      std::fprintf(stderr, "  repetition %zu %s [%s]: %s\n", f.repetition + 1, f.scheme.c_str(), f.stage.c_str(),
                   f.message.c_str());
  }
  const auto status = harness::emit_reports(bundle, out);
  for (const auto& p : status.written) std::fprintf(stderr, "wrote %s\n", p.string().c_str());
  return status.partial ? kPartial : kOk;
}

struct ScoreArgs {
  std::string surface;
  std::string truth;
  std::string scheme = "candidate";
  std::string levels;
  std::string out;
};

int cmd_score(const ScoreArgs& a) {
  const auto sf = ensemble::read_surface_csv(a.surface);
  const auto truth = csv::read(a.truth);
  const std::size_t tc = truth.column("t"), yc = truth.column("y");
  std::map<std::size_t, double> y_at;
  for (const auto& row : truth.rows) {
    const double t = csv::parse_double(row[tc]);
    if (!(t >= 0.0) || t != static_cast<double>(static_cast<std::size_t>(t))) {
      throw IoError(a.truth + ": bad time index '" + row[tc] + "'");
    }
    y_at[static_cast<std::size_t>(t)] = csv::parse_double(row[yc]);
  }
  std::vector<double> y;
  y.reserve(sf.t.size());
  for (std::size_t t : sf.t) {
    const auto it = y_at.find(t);
    if (it == y_at.end()) throw IoError(a.truth + ": no observation for t=" + std::to_string(t));
    y.push_back(it->second);
  }

  std::vector<score::IntervalLevel> levels;
  if (a.levels.empty()) {
    levels = score::default_levels();
  } else {
    for (const auto& item : split_list(a.levels)) {
      const double cov = csv::parse_double(item);
      if (!(cov > 0.0 && cov < 1.0)) throw ConfigError("level must lie in (0, 1), got " + item);
      // 1 - 0.99 is not 0.01 in binary; reuse the canonical alpha when the level is a standard one.
      score::IntervalLevel lv{1.0 - cov};
      for (const auto& d : score::default_levels())
        if (std::fabs(d.coverage() - cov) < 1e-12) lv = d;
      levels.push_back(lv);
    }
  }

  std::vector<score::MetricRow> rows;
  for (const auto& lv : levels) score::append_rows(rows, a.scheme, sf.surface.score(y, lv));
  if (sf.surface.crossings() > 0) std::fprintf(stderr, "note: surface has %zu quantile crossings\n", sf.surface.crossings());

  if (a.out.empty() || a.out == "-") {
    score::write_metrics_csv(rows, std::cout);
  } else {
    score::write_metrics_csv(rows, a.out);
    std::fprintf(stderr, "wrote %s\n", a.out.c_str());
  }
  return kOk;
}

int cmd_report(const std::string& bundle_path, const std::string& out_dir) {
  const auto bundle = harness::read_bundle_json(bundle_path);
  const fs::path out = out_dir.empty() ? default_out_dir() : fs::path(out_dir);
  const auto status = harness::emit_tables(bundle, out);
  for (const auto& e : bundle.experiments) {
    std::string title = std::string(harness::table_name(e.spec.id)) + " (" + std::string(harness::to_string(e.spec.id)) +
                        ", m=" + std::to_string(e.spec.m) + ", repetitions=" + std::to_string(e.spec.repetitions) +
                        "): levels 99 97.5 95 90 80%";
    print_table(title, e.table_rows());
    if (!e.failures.empty()) std::printf("  %zu failure(s) recorded\n", e.failures.size());
  }
  for (const auto& p : status.written) std::fprintf(stderr, "wrote %s\n", p.string().c_str());
  return status.partial ? kPartial : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantile-averaging ensemble post-processing: toy experiments and scoring"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(harness::version()));

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Write a simulated toy dataset as CSV");
  s->add_option("--family", sim.family, "toy1, toy2, toy2_sdsq, toy3 or noninformative")->capture_default_str();
  s->add_option("--n", sim.n, "Number of time steps")->capture_default_str();
  s->add_option("--seed", sim.seed, "Random seed")->capture_default_str();
  s->add_option("--n1", sim.n1, "Length of T1 (default n/12)");
  s->add_option("--n2", sim.n2, "Length of T2 (default n/12)");
  s->add_option("--n3", sim.n3, "Length of T3 (default the rest)");
  s->add_option("-o,--out", sim.out, "Output file, '-' for stdout");

  RunArgs run;
  auto* r = app.add_subcommand("run", "Run experiments and write the report files");
  r->add_option("-e,--experiment", run.experiments, "toy1..toy4, add1, add2, a comma list, or all");
  r->add_option("-c,--config", run.config, "key=value config file");
  r->add_option("--set", run.sets, "Override one setting, key=value (repeatable)");
  r->add_option("--m", run.m, "Number of sister predictions");
  r->add_option("--seed", run.seed, "Random seed");
  r->add_option("--repetitions", run.repetitions, "Repetitions for the add1/add2 studies");
  r->add_option("--threads", run.threads, "Worker threads, 0 for one per core");
  r->add_option("--scale", run.scale, "full or desk (m=200, at most 50 repetitions)");
  r->add_option("-o,--out-dir", run.out_dir, "Output directory (default $QAVG_OUT_DIR or ./qavg_out)");

  ScoreArgs sc;
  auto* c = app.add_subcommand("score", "Score a quantile surface CSV against observations");
  c->add_option("--surface", sc.surface, "Surface CSV with columns t,p_<prob>...")->required();
  c->add_option("--truth", sc.truth, "CSV with columns t and y (a simulate output works)")->required();
  c->add_option("--scheme", sc.scheme, "Scheme name for the output rows")->capture_default_str();
  c->add_option("--levels", sc.levels, "Comma list of interval levels (default 0.99,0.975,0.95,0.9,0.8)");
  c->add_option("-o,--out", sc.out, "Metrics CSV path (default stdout)");

  std::string bundle_path, report_out;
  auto* p = app.add_subcommand("report", "Regenerate the tables from a bundle.json");
  p->add_option("bundle", bundle_path, "Path to bundle.json")->required();
  p->add_option("-o,--out-dir", report_out, "Output directory (default $QAVG_OUT_DIR or ./qavg_out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*r) return cmd_run(run);
    if (*c) return cmd_score(sc);
    if (*p) return cmd_report(bundle_path, report_out);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kConfig;
  } catch (const IoError& e) {
    std::fprintf(stderr, "input/output error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kPartial;
  }
  return kConfig;
}
