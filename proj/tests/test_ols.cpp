#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qavg/error.hpp"
#include "qavg/regress.hpp"

using namespace qavg::regress;

TEST_CASE("exact line is recovered with zero mse") {
  const std::vector<double> x{0, 1, 2}, y{5, 7, 9};
  const auto fit = ols_fit(x, y, DesignKind::Linear);
  CHECK(fit.coefficients[0] == doctest::Approx(5.0).epsilon(1e-13));
  CHECK(fit.coefficients[1] == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(fit.mse < 1e-25);
  CHECK(fit.n_train == 3);
  const auto iv = ols_predict_interval(fit, 3.0, 0.05);
  CHECK(iv.lower == doctest::Approx(11.0));
  CHECK(iv.upper == doctest::Approx(11.0));
}

TEST_CASE("fit agrees with explicit normal equations") {
  std::mt19937_64 g(17);
  for (auto design : {DesignKind::Linear, DesignKind::Quadratic}) {
    const std::size_t k = coefficient_count(design);
    for (int trial = 0; trial < 20; ++trial) {
      const auto x = oracle::normal_sample(g, 50);
      auto y = oracle::normal_sample(g, 50, 0.0, 2.0);
      for (std::size_t i = 0; i < x.size(); ++i) y[i] += 1.0 - 3.0 * x[i] + (k == 3 ? 0.5 * x[i] * x[i] : 0.0);
      const auto fit = ols_fit(x, y, design);
      const auto ref = oracle::normal_equations(x, y, k);
      double sse = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - oracle::design_value(ref, x[i]);
        sse += r * r;
      }
      for (std::size_t j = 0; j < k; ++j) CHECK(fit.coefficients[j] == doctest::Approx(ref[j]).epsilon(1e-10));
      CHECK(fit.mse == doctest::Approx(sse / static_cast<double>(x.size() - k)).epsilon(1e-10));
    }
  }
}

TEST_CASE("interval is symmetric with the Gaussian half-width") {
  const std::vector<double> x{0, 1, 2, 3, 4}, y{1.0, 2.5, 2.9, 4.6, 5.0};
  const auto fit = ols_fit(x, y, DesignKind::Linear);
  const auto iv = ols_predict_interval(fit, 1.7, 0.1);
  const double center = fit.coefficients[0] + fit.coefficients[1] * 1.7;
  CHECK(0.5 * (iv.lower + iv.upper) == doctest::Approx(center));
  CHECK(0.5 * (iv.upper - iv.lower) == doctest::Approx(oracle::normal_quantile(0.95) * std::sqrt(fit.mse)));
  CHECK(ols_quantile(fit, 1.7, 0.95) == doctest::Approx(iv.upper));
}

TEST_CASE("ols rejects degenerate inputs") {
  const std::vector<double> two{0, 1};
  CHECK_THROWS_AS(ols_fit(two, two, DesignKind::Linear), qavg::InsufficientDataError);
  const std::vector<double> flat{2, 2, 2, 2}, y{1, 2, 3, 4};
  CHECK_THROWS_AS(ols_fit(flat, y, DesignKind::Linear), qavg::SingularityError);
  const std::vector<double> short_y{1, 2, 3};
  CHECK_THROWS_AS(ols_fit(y, short_y, DesignKind::Linear), qavg::ShapeError);
  const auto fit = ols_fit(y, y, DesignKind::Linear);
  CHECK_THROWS_AS(ols_predict_interval(fit, 0.0, 0.0), qavg::DomainError);
  CHECK_THROWS_AS(ols_predict_interval(fit, 0.0, 1.0), qavg::DomainError);
}

TEST_CASE("design names round trip") {
  CHECK(design_from_string(to_string(DesignKind::Linear)) == DesignKind::Linear);
  CHECK(design_from_string(to_string(DesignKind::Quadratic)) == DesignKind::Quadratic);
  CHECK_THROWS_AS(design_from_string("cubic"), qavg::ConfigError);
}

TEST_CASE("residuals are orthogonal to every design column") {
  std::mt19937_64 g(3);
  const auto x = oracle::normal_sample(g, 500);
  auto y = oracle::normal_sample(g, 500, 0.0, 1.0);
  double norm_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] += 5.0 + 2.0 * x[i] + x[i] * x[i];
    norm_y += y[i] * y[i];
  }
  norm_y = std::sqrt(norm_y);
  const auto fit = ols_fit(x, y, DesignKind::Quadratic);
  double c0 = 0, c1 = 0, c2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - evaluate(fit.coefficients, DesignKind::Quadratic, x[i]);
    c0 += r;
    c1 += r * x[i];
    c2 += r * x[i] * x[i];
  }
  CHECK(std::fabs(c0) < 1e-8 * norm_y);
  CHECK(std::fabs(c1) < 1e-8 * norm_y);
  CHECK(std::fabs(c2) < 1e-8 * norm_y);
  CHECK(std::fabs(fit.coefficients[2] - 1.0) < 0.1);
}

TEST_CASE("wider levels nest narrower intervals") {
  const OlsFit fit{.coefficients = {0.0, 1.0}, .mse = 1.0, .n_train = 10};
  const auto iv = ols_predict_interval(fit, 0.0, 0.05);
  CHECK(std::fabs(iv.upper - 1.959964) < 1e-5);
  CHECK(std::fabs(iv.lower + 1.959964) < 1e-5);
  CHECK(std::fabs(ols_predict_interval(fit, 0.0, 0.5).upper - 0.674490) < 1e-6);
  for (double xn : {-3.0, 0.0, 2.5}) {
    const auto wide = ols_predict_interval(fit, xn, 0.01);
    const auto narrow = ols_predict_interval(fit, xn, 0.2);
    CHECK(wide.lower <= narrow.lower);
    CHECK(wide.upper >= narrow.upper);
  }
}
