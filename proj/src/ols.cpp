#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "gram.hpp"
#include "qavg/error.hpp"
#include "qavg/normal.hpp"
#include "qavg/regress.hpp"

namespace qavg::regress {

std::string_view to_string(DesignKind d) { return d == DesignKind::Linear ? "linear" : "quadratic"; }

DesignKind design_from_string(std::string_view name) {
  if (name == "linear") return DesignKind::Linear;
  if (name == "quadratic") return DesignKind::Quadratic;
  throw ConfigError("unknown design '" + std::string(name) + "'");
}

double evaluate(std::span<const double> coef, DesignKind d, double x) {
  const auto row = design_row(x, d);
  double v = coef[0] + coef[1] * row[1];
  if (d == DesignKind::Quadratic) v += coef[2] * row[2];
  return v;
}

namespace detail {

Eigen::MatrixXd gram(std::span<const double> x, DesignKind design) {
  const std::size_t k = coefficient_count(design);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(k, k);
  for (double xi : x) {
    const auto row = design_row(xi, design);
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = a; b < k; ++b) g(a, b) += row[a] * row[b];
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < a; ++b) g(a, b) = g(b, a);
  return g;
}

Eigen::VectorXd cross(std::span<const double> x, std::span<const double> y, DesignKind design) {
  const std::size_t k = coefficient_count(design);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(k);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto row = design_row(x[i], design);
    for (std::size_t a = 0; a < k; ++a) v(a) += row[a] * y[i];
  }
  return v;
}

Eigen::LDLT<Eigen::MatrixXd> factor_gram(const Eigen::MatrixXd& g) {
  // Rank test on the correlation form so column scale does not matter.
  const Eigen::VectorXd d = g.diagonal();
  if ((d.array() <= 0.0).any()) throw SingularityError("design matrix has a zero column");
  const Eigen::VectorXd inv_sqrt = d.array().sqrt().inverse();
  const Eigen::MatrixXd corr = inv_sqrt.asDiagonal() * g * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * hi)) throw SingularityError("design matrix is rank deficient");
  return Eigen::LDLT<Eigen::MatrixXd>(g);
}

}  // namespace detail

OlsFit ols_fit(std::span<const double> x, std::span<const double> y, DesignKind design) {
  if (x.size() != y.size()) throw ShapeError("ols_fit: x and y lengths differ");
  const std::size_t n = x.size();
  const std::size_t k = coefficient_count(design);
  if (n <= k) {
    throw InsufficientDataError("ols_fit: need more than " + std::to_string(k) + " observations, got " +
                                std::to_string(n));
  }
  const Eigen::MatrixXd g = detail::gram(x, design);
  const auto ldlt = detail::factor_gram(g);
  Eigen::VectorXd beta = ldlt.solve(detail::cross(x, y, design));

  // One refinement pass against the residuals recovers the accuracy lost by
  // squaring the condition number in the normal equations.
  std::vector<double> resid(n);
  auto fill_residuals = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      resid[i] = y[i] - evaluate(std::span<const double>(beta.data(), k), design, x[i]);
    }
  };
  fill_residuals();
  beta += ldlt.solve(detail::cross(x, resid, design));
  fill_residuals();

  double sse = 0.0;
  for (double r : resid) sse += r * r;

  OlsFit fit;
  fit.coefficients.assign(beta.data(), beta.data() + k);
  fit.mse = sse / static_cast<double>(n - k);
  fit.n_train = n;
  fit.design = design;
  return fit;
}

Interval ols_predict_interval(const OlsFit& fit, double x_new, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("ols_predict_interval: alpha must lie in (0, 1)");
  if (fit.mse < 0.0) throw DomainError("ols_predict_interval: negative mse");
  const double center = evaluate(fit.coefficients, fit.design, x_new);
  const double half = inv_norm_cdf(1.0 - alpha / 2.0) * std::sqrt(fit.mse);
  return {center - half, center + half};
}

double ols_quantile(const OlsFit& fit, double x_new, double p) {
  return evaluate(fit.coefficients, fit.design, x_new) + inv_norm_cdf(p) * std::sqrt(fit.mse);
}

}  // namespace qavg::regress
