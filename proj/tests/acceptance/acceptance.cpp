// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
// The full-scale toy experiments dominate the runtime (several minutes).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qavg/bayes.hpp"
#include "qavg/ensemble.hpp"
#include "qavg/harness.hpp"
#include "qavg/regress.hpp"
#include "qavg/score.hpp"
#include "qavg/simulate.hpp"

namespace {

using namespace qavg;
using harness::ExperimentId;
using harness::ExperimentResult;
using harness::ExperimentSpec;

constexpr std::array<const char*, 5> kLevelNames{"99%", "97.5%", "95%", "90%", "80%"};

struct Criterion {
  Criterion(int n, std::string t) : number(n), title(std::move(t)) {}

  int number;
  std::string title;
  int checks = 0;
  std::vector<std::string> misses;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) misses.push_back(what);
  }
  bool passed() const { return misses.empty() && checks > 0; }
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void report(const Criterion& c, double seconds) {
  std::printf("criterion %d %s: %s (%d checks, %zu misses, %.1f s)\n", c.number, c.title.c_str(),
              c.passed() ? "PASS" : "FAIL", c.checks, c.misses.size(), seconds);
  for (const auto& m : c.misses) std::printf("    miss: %s\n", m.c_str());
  std::fflush(stdout);
}

const score::IntervalMetrics& level_of(const ExperimentResult& r, const std::string& scheme, std::size_t j) {
  const auto* o = r.find(scheme);
  if (!o) throw std::runtime_error("scheme missing from results: " + scheme);
  return o->levels[j];
}

double average_ais(const ExperimentResult& r, const std::string& scheme, std::size_t j) {
  for (const auto& a : r.averages)
    if (a.scheme == scheme) return a.levels[j].ais;
  throw std::runtime_error("scheme missing from averages: " + scheme);
}

ExperimentResult run_logged(ExperimentSpec spec) {
  auto r = harness::run_experiment(spec);
  std::printf("  ran %s: m=%zu reps=%zu failures=%zu %.1f s\n", std::string(harness::to_string(spec.id)).c_str(),
              spec.m, spec.repetitions, r.failures.size(), r.wall_seconds);
  for (const auto& f : r.failures)
    std::printf("    failure rep %zu %s [%s]: %s\n", f.repetition, f.scheme.c_str(), f.stage.c_str(), f.message.c_str());
  std::fflush(stdout);
  return r;
}

// ---------------------------------------------------------------------------
// Reference values of toy experiment 1. Rows: Bayes, LR, QR, ensemble 1-6.
// NaN marks cells absent from the reference table.

constexpr double kNa = std::numeric_limits<double>::quiet_NaN();

struct ReferenceRow {
  const char* scheme;
  std::array<double, 5> cp, aw, ais;
};

const std::array<ReferenceRow, 9> kToy1{{
    {"bayesian_regression", {0.988, 0.973, 0.949, 0.895, 0.798}, {15.29, 13.35, 11.69, 9.82, 7.65},
     {17.63, 15.69, 14.13, 12.47, 10.62}},
    {"linear_regression", {0.989, 0.973, 0.948, 0.897, 0.798}, {15.40, 13.40, 11.71, 9.83, 7.66},
     {17.47, 15.67, 14.11, 12.46, 10.61}},
    {"quantile_regression", {0.986, 0.971, 0.945, 0.891, 0.802}, {15.09, 13.31, 11.62, 9.73, 7.71},
     {17.77, 15.81, 14.23, 12.52, 10.61}},
    {"ensemble_1", {0.989, 0.973, 0.948, 0.895, 0.797}, {15.36, 13.36, 11.68, 9.80, 7.63},
     {17.49, 15.68, 14.14, 12.47, 10.61}},
    {"ensemble_2", {0.989, 0.972, 0.947, 0.895, 0.797}, {15.31, 13.32, 11.65, 9.78, 7.62},
     {17.49, 15.69, 14.14, 12.47, 10.61}},
    {"ensemble_3", {0.989, 0.973, 0.948, 0.895, 0.797}, {15.36, 13.36, 11.68, 9.80, 7.63},
     {17.49, 15.69, 14.14, 12.47, 10.61}},
    {"ensemble_4", {0.987, 0.967, 0.951, 0.890, 0.805}, {14.98, 12.88, 11.87, 9.70, 7.81},
     {17.56, 15.82, 14.18, 12.52, 10.65}},
    {"ensemble_5", {0.986, 0.968, 0.949, 0.891, 0.804}, {14.94, 13.03, 11.81, 9.73, 7.76},
     {17.59, 15.81, 14.18, 12.52, 10.64}},
    {"ensemble_6", {kNa, kNa, kNa, kNa, kNa}, {kNa, kNa, kNa, kNa, kNa}, {17.57, 15.82, 14.18, 12.52, 10.65}},
}};

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  std::vector<Criterion> done;
  auto finish = [&](Criterion c, clock::time_point t0) {
    report(c, std::chrono::duration<double>(clock::now() - t0).count());
    done.push_back(std::move(c));
  };
  std::printf("qavg %s acceptance suite\n", std::string(harness::version()).c_str());

  // 5: simplex solutions against exhaustive basic-solution enumeration.
  {
    const auto t0 = clock::now();
    Criterion c{5, "quantile regression matches enumeration"};
    std::mt19937_64 g(2024);
    const std::array<double, 3> probs{0.1, 0.5, 0.9};
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
      const std::size_t n = 5 + static_cast<std::size_t>(inst) % 26;
      const double p = probs[static_cast<std::size_t>(inst) % 3];
      const auto design = inst % 4 == 3 ? regress::DesignKind::Quadratic : regress::DesignKind::Linear;
      const auto x = oracle::normal_sample(g, n);
      auto y = oracle::normal_sample(g, n, 0.0, 1.0 + (inst % 5));
      for (std::size_t i = 0; i < n; ++i) y[i] += 5.0 + 2.0 * x[i];
      if (inst % 10 == 9)  // ties in the response
        for (auto& v : y) v = std::round(v);
      const auto fit = regress::qr_fit(x, y, p, design);
      const double ref = oracle::qr_enumeration_min(x, y, p, regress::coefficient_count(design));
      const double rel = std::fabs(fit.achieved_loss - ref) / std::max(ref, 1e-300);
      worst = std::max(worst, rel);
      c.expect(rel <= 1e-8 || std::fabs(fit.achieved_loss - ref) <= 1e-12,
               fmt("instance %d n=%zu p=%.1f loss %.17g vs %.17g", inst, n, p, fit.achieved_loss, ref));
    }
    std::printf("  worst relative loss gap %.3g\n", worst);
    finish(std::move(c), t0);
  }

  // 6: Gibbs sampler against least squares and frequentist coverage.
  {
    const auto t0 = clock::now();
    Criterion c{6, "Gibbs sampler correctness"};
    std::mt19937_64 g(77);
    double max_z = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      const std::size_t n = 30 + 10 * static_cast<std::size_t>(rep);
      const auto design = rep % 2 ? regress::DesignKind::Quadratic : regress::DesignKind::Linear;
      const std::size_t k = regress::coefficient_count(design);
      const auto x = oracle::normal_sample(g, n);
      auto y = oracle::normal_sample(g, n, 0.0, 3.0);
      for (std::size_t i = 0; i < n; ++i) y[i] += 5.0 + 2.0 * x[i] + (k == 3 ? 0.5 * x[i] * x[i] : 0.0);
      const auto ols = oracle::normal_equations(x, y, k);
      const std::size_t m = 2000;
      const auto d = bayes::gibbs_sample(x, y, design, {.m = m, .burn_in = 100, .seed = 100 + std::uint64_t(rep)});
      for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          const double v = d.theta[i * k + j];
          s += v;
          s2 += v * v;
        }
        const double mean = s / double(m);
        const double sd = std::sqrt((s2 - s * mean) / double(m - 1));
        const double z = std::fabs(mean - ols[j]) / (sd / std::sqrt(double(m)));
        max_z = std::max(max_z, z);
        c.expect(z <= 3.0, fmt("dataset %d coefficient %zu: %.3f MC standard errors", rep, j, z));
      }
    }
    // Data drawn from the model; the 5%-95% posterior interval of the intercept.
    std::size_t covered = 0;
    const std::size_t replicates = 200;
    for (std::size_t r = 0; r < replicates; ++r) {
      const auto x = oracle::normal_sample(g, 40);
      auto y = oracle::normal_sample(g, 40, 0.0, 3.0);
      for (std::size_t i = 0; i < x.size(); ++i) y[i] += 5.0 + 2.0 * x[i];
      const auto d = bayes::gibbs_sample(x, y, regress::DesignKind::Linear, {.m = 1000, .burn_in = 100, .seed = 5000 + r});
      std::vector<double> t1(d.m());
      for (std::size_t i = 0; i < d.m(); ++i) t1[i] = d.theta[i * 2];
      std::sort(t1.begin(), t1.end());
      const double lo = t1[static_cast<std::size_t>(0.05 * double(t1.size()))];
      const double hi = t1[static_cast<std::size_t>(0.95 * double(t1.size())) - 1];
      covered += (lo <= 5.0 && 5.0 <= hi);
    }
    const double coverage = double(covered) / double(replicates);
    std::printf("  largest |posterior mean - OLS| %.2f MC SE; 90%% interval coverage %.3f\n", max_z, coverage);
    c.expect(std::fabs(coverage - 0.90) <= 0.06, fmt("coverage %.3f", coverage));
    finish(std::move(c), t0);
  }

  // 7: a single sister makes the three variants coincide.
  {
    const auto t0 = clock::now();
    Criterion c{7, "m=1 variants are bit-identical"};
    for (auto family : {simulate::Family::Toy1, simulate::Family::Toy2SdSquared, simulate::Family::Toy3}) {
      for (auto design : {regress::DesignKind::Linear, regress::DesignKind::Quadratic}) {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
          const auto data = simulate::simulate({family, 12000, seed});
          const auto prep = ensemble::prepare_ensemble(data, design, seed, {.m = 1, .burn_in = 100});
          for (int base : {1, 4}) {
            const auto ref = ensemble::run_scheme_on(ensemble::EnsembleScheme::from_number(base), prep);
            for (int s = base + 1; s < base + 3; ++s) {
              const auto other = ensemble::run_scheme_on(ensemble::EnsembleScheme::from_number(s), prep);
              const bool same = other.final.values.size() == ref.final.values.size() &&
                                std::memcmp(other.final.values.data(), ref.final.values.data(),
                                            ref.final.values.size() * sizeof(double)) == 0;
              c.expect(same, fmt("%s %s seed %u: scheme %d differs from scheme %d",
                                 std::string(simulate::to_string(family)).c_str(),
                                 std::string(regress::to_string(design)).c_str(), unsigned(seed), s, base));
            }
          }
        }
      }
    }
    finish(std::move(c), t0);
  }

  // 9: metric examples and the full-coverage identity.
  {
    const auto t0 = clock::now();
    Criterion c{9, "interval metrics"};
    using V = std::vector<double>;
    c.expect(score::coverage_probability(V{0, 0}, V{2, 2}, V{0.5, 1.5}) == 1.0, "all inside gives coverage 1");
    c.expect(score::coverage_probability(V{1, 1}, V{2, 2}, V{0, 3}) == 0.0, "y=(0,3) in [1,2] gives coverage 0");
    c.expect(score::average_width(V{0, 1, -3}, V{2, 3, -1}) == 2.0, "constant width 2");
    c.expect(score::average_width(V{4, 5}, V{4, 5}) == 0.0, "degenerate width 0");
    c.expect(score::average_interval_score(V{0}, V{2}, V{1}, 0.2) == 2.0, "inside scores the width");
    c.expect(score::average_interval_score(V{0}, V{2}, V{3}, 0.2) == 12.0, "miss above scores 12");
    c.expect(score::average_interval_score(V{0}, V{2}, V{-1}, 0.2) == 12.0, "miss below scores 12");
    c.expect(score::relative_improvement(8, 10) == 0.2, "RI(8,10) = 0.2");
    c.expect(score::relative_improvement(10, 10) == 0.0, "RI of equal scores is 0");
    c.expect(score::relative_improvement(12, 10) == -0.2, "RI(12,10) = -0.2");
    const auto w = score::wisdom_diagnostics(V{3.5, 3.5, 3.5}, 3.5);
    bool zeros = w.mean_ri == 0.0 && w.ri.size() == 3;
    for (double r : w.ri) zeros = zeros && r == 0.0;
    c.expect(zeros, "sisters equal to the ensemble give zero RI");

    std::mt19937_64 g(99);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int equal = 0;
    for (int inst = 0; inst < 1000; ++inst) {
      const std::size_t n = 1 + static_cast<std::size_t>(inst) % 50;
      V l(n), u(n), y(n);
      for (std::size_t t = 0; t < n; ++t) {
        l[t] = 10.0 * (U(g) - 0.5);
        u[t] = l[t] + 5.0 * U(g);
        y[t] = l[t] + (u[t] - l[t]) * U(g);
      }
      const double alpha = score::default_levels()[static_cast<std::size_t>(inst) % 5].alpha;
      const auto mt = score::interval_metrics(l, u, y, alpha);
      equal += (mt.cp == 1.0 && mt.ais == mt.aw);
    }
    c.expect(equal == 1000, fmt("AIS = AW on %d of 1000 full-coverage instances", equal));
    finish(std::move(c), t0);
  }

  // Full-scale toy experiments, shared by criteria 1-4.
  std::printf("running full-scale toy experiments\n");
  std::fflush(stdout);
  const auto toy1 = run_logged(ExperimentSpec::defaults(ExperimentId::Toy1Exp));
  const auto toy2 = run_logged(ExperimentSpec::defaults(ExperimentId::Toy2Exp));
  const auto toy3 = run_logged(ExperimentSpec::defaults(ExperimentId::Toy3Exp));
  const auto toy4 = run_logged(ExperimentSpec::defaults(ExperimentId::Toy4Exp));

  {
    const auto t0 = clock::now();
    Criterion c{1, "toy experiment 1 table"};
    c.expect(toy1.failures.empty(), "toy 1 recorded failures");
    for (const auto& row : kToy1) {
      if (!toy1.find(row.scheme)) {
        c.expect(false, std::string("missing scheme ") + row.scheme);
        continue;
      }
      for (std::size_t j = 0; j < 5; ++j) {
        const auto& got = level_of(toy1, row.scheme, j);
        if (!std::isnan(row.cp[j]))
          c.expect(std::fabs(got.cp - row.cp[j]) <= 0.015,
                   fmt("%s %s CP %.4f vs %.3f", row.scheme, kLevelNames[j], got.cp, row.cp[j]));
        if (!std::isnan(row.aw[j]))
          c.expect(std::fabs(got.aw / row.aw[j] - 1.0) <= 0.05,
                   fmt("%s %s AW %.3f vs %.2f (%+.1f%%)", row.scheme, kLevelNames[j], got.aw, row.aw[j],
                       100.0 * (got.aw / row.aw[j] - 1.0)));
        c.expect(std::fabs(got.ais / row.ais[j] - 1.0) <= 0.05,
                 fmt("%s %s AIS %.3f vs %.2f (%+.1f%%)", row.scheme, kLevelNames[j], got.ais, row.ais[j],
                     100.0 * (got.ais / row.ais[j] - 1.0)));
      }
    }
    finish(std::move(c), t0);
  }

  {
    const auto t0 = clock::now();
    Criterion c{2, "toy experiment 2 improvement pattern"};
    c.expect(toy2.failures.empty(), "toy 2 recorded failures");
    const std::array<double, 5> target{0.40, 0.30, 0.35, 0.30, 0.25};
    for (int s = 4; s <= 6; ++s) {
      std::string line = fmt("  scheme %d over %d:", s, s - 3);
      for (std::size_t j = 0; j < 5; ++j) {
        const double ri = score::relative_improvement(level_of(toy2, "ensemble_" + std::to_string(s), j).ais,
                                                      level_of(toy2, "ensemble_" + std::to_string(s - 3), j).ais);
        line += fmt(" %.1f%%", 100.0 * ri);
        c.expect(std::fabs(ri - target[j]) <= 0.10,
                 fmt("scheme %d over %d at %s: %.1f%% vs %.0f%%", s, s - 3, kLevelNames[j], 100.0 * ri,
                     100.0 * target[j]));
      }
      std::printf("%s\n", line.c_str());
    }
    finish(std::move(c), t0);
  }

  {
    const auto t0 = clock::now();
    Criterion c{3, "quadratic point model on toy 3"};
    c.expect(toy3.failures.empty() && toy4.failures.empty(), "toy 3/4 recorded failures");
    const std::array<double, 5> target{0.53, 0.50, 0.47, 0.44, 0.41};
    for (int s = 4; s <= 6; ++s) {
      const std::string name = "ensemble_" + std::to_string(s);
      std::string line = fmt("  scheme %d:", s);
      for (std::size_t j = 0; j < 5; ++j) {
        const double ri = score::relative_improvement(level_of(toy4, name, j).ais, level_of(toy3, name, j).ais);
        line += fmt(" %.1f%%", 100.0 * ri);
        c.expect(std::fabs(ri - target[j]) <= 0.08,
                 fmt("scheme %d at %s: %.1f%% vs %.0f%%", s, kLevelNames[j], 100.0 * ri, 100.0 * target[j]));
      }
      std::printf("%s\n", line.c_str());
    }
    finish(std::move(c), t0);
  }

  // Desk-scale repetition studies, shared by criteria 4 and 8.
  std::printf("running desk-scale repetition studies\n");
  std::fflush(stdout);
  auto desk = [](ExperimentId id) {
    auto s = ExperimentSpec::defaults(id);
    s.apply_scale(harness::Scale::Desk);
    s.repetitions = 100;
    return s;
  };
  const auto add1 = run_logged(desk(ExperimentId::AddType1));
  const auto add2 = run_logged(desk(ExperimentId::AddType2));

  {
    const auto t0 = clock::now();
    Criterion c{4, "wisdom of the crowd"};
    std::size_t inequalities = 0;
    for (const auto* r : {&toy1, &toy2, &toy3, &toy4, &add1, &add2}) {
      for (const auto& rep : r->repetitions)
        for (const auto& o : rep.outcomes) {
          if (o.mean_sister_ais.empty()) continue;
          for (std::size_t j = 0; j < 5; ++j) {
            ++inequalities;
            if (!(o.levels[j].ais <= o.mean_sister_ais[j] + 1e-9))
              c.expect(false, fmt("%s rep %zu %s at %s: %.12g > mean sister %.12g",
                                  std::string(harness::to_string(r->spec.id)).c_str(), rep.index, o.scheme.c_str(),
                                  kLevelNames[j], o.levels[j].ais, o.mean_sister_ais[j]));
          }
        }
    }
    c.expect(inequalities == (4 * 6 + 200 * 6) * 5, fmt("%zu inequalities checked", inequalities));
    std::printf("  %zu crowd inequalities checked\n", inequalities);

    const std::array<std::array<double, 5>, 2> target{{{0.10, 0.06, 0.05, 0.06, 0.06}, {0.20, 0.10, 0.13, 0.14, 0.12}}};
    for (int s = 4; s <= 5; ++s) {
      std::string line = fmt("  toy 4 scheme %d mean RI:", s);
      for (std::size_t j = 0; j < 5; ++j) {
        const auto* w = toy4.find_wisdom("ensemble_" + std::to_string(s), score::default_levels()[j].coverage());
        if (!w) {
          c.expect(false, fmt("no wisdom data for scheme %d", s));
          continue;
        }
        const double pct = 100.0 * w->diagnostics.mean_ri;
        line += fmt(" %.3f%%", pct);
        const double want = target[static_cast<std::size_t>(s - 4)][j];
        c.expect(pct > 0.0 && std::fabs(pct - want) <= 0.10,
                 fmt("scheme %d at %s: mean RI %.3f%% vs %.2f%%", s, kLevelNames[j], pct, want));
      }
      std::printf("%s\n", line.c_str());
    }
    finish(std::move(c), t0);
  }

  {
    const auto t0 = clock::now();
    Criterion c{8, "repetition study orderings"};
    c.expect(add1.failures.empty() && add2.failures.empty(), "repetition studies recorded failures");
    const auto order1 = harness::scheme_order(add1.spec);
    std::printf("  type 1 average AIS at 99%%:");
    for (const auto& s : order1) std::printf(" %s=%.3f", s.c_str(), average_ais(add1, s, 0));
    std::printf("\n");
    double worst_other = -1.0;
    for (const auto& s : order1)
      if (s != "ensemble_4" && s != "ensemble_5" && s != "ensemble_6")
        worst_other = std::max(worst_other, average_ais(add1, s, 0));
    for (int s = 4; s <= 6; ++s) {
      const double a = average_ais(add1, "ensemble_" + std::to_string(s), 0);
      c.expect(a > worst_other, fmt("type 1 scheme %d AIS %.3f not above %.3f", s, a, worst_other));
    }
    const double lr = average_ais(add1, "linear_regression", 0);
    for (int s = 1; s <= 3; ++s) {
      const double rel = average_ais(add1, "ensemble_" + std::to_string(s), 0) / lr - 1.0;
      std::printf("  type 1 scheme %d vs linear regression: %+.2f%%\n", s, 100.0 * rel);
      c.expect(std::fabs(rel) <= 0.03, fmt("type 1 scheme %d is %+.2f%% from linear regression", s, 100.0 * rel));
    }

    const auto order2 = harness::scheme_order(add2.spec);
    std::printf("  type 2 average AIS at 99%%:");
    for (const auto& s : order2) std::printf(" %s=%.3f", s.c_str(), average_ais(add2, s, 0));
    std::printf("\n");
    const double e6 = average_ais(add2, "ensemble_6", 0);
    for (const auto& s : order2)
      if (s != "ensemble_6")
        c.expect(e6 > average_ais(add2, s, 0),
                 fmt("type 2 scheme 6 AIS %.3f not above %s %.3f", e6, s.c_str(), average_ais(add2, s, 0)));
    finish(std::move(c), t0);
  }

  std::sort(done.begin(), done.end(), [](const auto& a, const auto& b) { return a.number < b.number; });
  std::printf("\nsummary\n");
  int failed = 0;
  for (const auto& c : done) {
    std::printf("  criterion %d %-40s %s\n", c.number, c.title.c_str(), c.passed() ? "PASS" : "FAIL");
    failed += !c.passed();
  }
  std::printf("%d of %zu criteria passed\n", int(done.size()) - failed, done.size());
  return failed ? 1 : 0;
}
