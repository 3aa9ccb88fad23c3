#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "qavg/error.hpp"
#include "qavg/simulate.hpp"

using namespace qavg::simulate;

namespace {

struct Moments {
  double mean, var;
};

Moments moments(std::span<const double> v) {
  double m = 0.0;
  for (double e : v) m += e;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double e : v) s += (e - m) * (e - m);
  return {m, s / static_cast<double>(v.size() - 1)};
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ma = moments(a), mb = moments(b);
  double c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) c += (a[i] - ma.mean) * (b[i] - mb.mean);
  return c / static_cast<double>(a.size() - 1) / std::sqrt(ma.var * mb.var);
}

}  // namespace

TEST_CASE("empty dataset") {
  const auto d = simulate({Family::Toy1, 0, 1});
  CHECK(d.size() == 0);
  CHECK(d.split.total() == 0);
}

TEST_CASE("default split matches the toy layout") {
  CHECK(default_split(12000) == PeriodSplit{1000, 1000, 10000});
  CHECK(default_split(0).total() == 0);
}

TEST_CASE("same key reproduces the dataset byte for byte") {
  const auto a = simulate({Family::Toy2, 500, 77});
  const auto b = simulate({Family::Toy2, 500, 77});
  std::ostringstream sa, sb;
  write_csv(a, sa);
  write_csv(b, sb);
  CHECK(sa.str() == sb.str());
  const auto c = simulate({Family::Toy2, 500, 78});
  CHECK(c.x != a.x);
}

TEST_CASE("x is standard normal for every family") {
  const double n = 12000;
  for (Family f : {Family::Toy1, Family::Toy2, Family::Toy3, Family::NonInformative, Family::Toy2SdSquared}) {
    const auto d = simulate({f, 12000, 2024});
    const auto m = moments(d.x);
    CHECK(std::fabs(m.mean) < 4.0 / std::sqrt(n));
    CHECK(std::fabs(m.var - 1.0) < 5.0 * std::sqrt(2.0 / n));
  }
}

TEST_CASE("toy 1 recovers the generating line") {
  const auto d = simulate({Family::Toy1, 12000, 5});
  const auto beta = oracle::normal_equations(d.x, d.y, 2);
  CHECK(std::fabs(beta[1] - 2.0) < 0.1);
  CHECK(std::fabs(beta[0] - 5.0) < 0.1);
  double sse = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) sse += std::pow(d.y[i] - beta[0] - beta[1] * d.x[i], 2);
  CHECK(std::fabs(sse / 11998.0 - 9.0) < 5.0 * 9.0 * std::sqrt(2.0 / 12000.0));
}

TEST_CASE("toy 2 noise grows with the mean") {
  const auto d = simulate({Family::Toy2, 12000, 6});
  std::vector<double> abs_resid(d.size()), abs_f(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    abs_f[i] = std::fabs(5.0 + 2.0 * d.x[i]);
    abs_resid[i] = std::fabs(d.y[i] - (5.0 + 2.0 * d.x[i]));
  }
  CHECK(correlation(abs_resid, abs_f) > 0.3);
}

TEST_CASE("toy 2 noise laws standardize to unit variance") {
  // Standardized by the law's own standard deviation, both variants are N(0, 1).
  const double n = 12000;
  auto sd_of = [](Family f, double x) {
    const double mu = 5.0 + 2.0 * x;
    return f == Family::Toy2 ? 0.2 * std::fabs(mu) : 0.04 * mu * mu;
  };
  for (Family f : {Family::Toy2, Family::Toy2SdSquared}) {
    const auto d = simulate({f, 12000, 31});
    std::vector<double> z(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) z[i] = (d.y[i] - 5.0 - 2.0 * d.x[i]) / sd_of(f, d.x[i]);
    const auto m = moments(z);
    CHECK(std::fabs(m.mean) < 4.0 / std::sqrt(n));
    CHECK(std::fabs(m.var - 1.0) < 5.0 * std::sqrt(2.0 / n));
  }
}

TEST_CASE("toy 3 recovers the quadratic law") {
  const auto d = simulate({Family::Toy3, 12000, 7});
  const auto beta = oracle::normal_equations(d.x, d.y, 3);
  CHECK(std::fabs(beta[0] - 5.0) < 0.1);
  CHECK(std::fabs(beta[1] - 2.0) < 0.1);
  CHECK(std::fabs(beta[2] - 1.0) < 0.1);
}

TEST_CASE("non-informative response is standard normal and unrelated to x") {
  const auto d = simulate({Family::NonInformative, 12000, 8});
  const auto m = moments(d.y);
  CHECK(std::fabs(m.mean) < 4.0 / std::sqrt(12000.0));
  CHECK(std::fabs(m.var - 1.0) < 5.0 * std::sqrt(2.0 / 12000.0));
  CHECK(std::fabs(correlation(d.x, d.y)) < 4.0 / std::sqrt(12000.0));
}

TEST_CASE("csv round trip keeps every bit and the split") {
  const auto d = simulate({Family::Toy3, 300, 9}, {100, 100, 100});
  const auto path = std::filesystem::temp_directory_path() / "qavg_test_dataset.csv";
  write_csv(d, path);
  const auto back = read_csv(path);
  CHECK(back.x == d.x);
  CHECK(back.y == d.y);
  CHECK(back.split == d.split);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,x,y,period");
  std::filesystem::remove(path);
}

TEST_CASE("configuration errors") {
  CHECK_THROWS_AS(simulate({Family::Toy1, 10, 1}, {3, 3, 3}), qavg::ConfigError);
  CHECK_THROWS_AS(family_from_string("toy9"), qavg::ConfigError);
  CHECK(family_from_string("noninformative") == Family::NonInformative);
  CHECK(family_from_string("toy2_sdsq") == Family::Toy2SdSquared);
}
