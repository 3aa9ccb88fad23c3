#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace qavg::regress {

/// Column layout of a single-predictor design: (1, x) or (1, x, x^2).
enum class DesignKind { Linear, Quadratic };

constexpr std::size_t coefficient_count(DesignKind d) { return d == DesignKind::Linear ? 2 : 3; }

std::string_view to_string(DesignKind d);
DesignKind design_from_string(std::string_view name);

/// Design row of x, padded with zeros past coefficient_count(d).
constexpr std::array<double, 3> design_row(double x, DesignKind d) {
  return {1.0, x, d == DesignKind::Quadratic ? x * x : 0.0};
}

/// Dot product of the design row of x with coef.
double evaluate(std::span<const double> coef, DesignKind d, double x);

struct Interval {
  double lower;
  double upper;
};

struct OlsFit {
  std::vector<double> coefficients;
  double mse = 0.0;  // SSE / (n_train - k)
  std::size_t n_train = 0;
  DesignKind design = DesignKind::Linear;
};

/// Least-squares fit of y on the design of x.
/// Throws ShapeError on length mismatch, InsufficientDataError when
/// n <= k, SingularityError when the design is rank deficient.
OlsFit ols_fit(std::span<const double> x, std::span<const double> y, DesignKind design);

/// Large-sample Gaussian interval: fitted value +- z_{1-alpha/2} sqrt(mse).
Interval ols_predict_interval(const OlsFit& fit, double x_new, double alpha);

/// Gaussian p-quantile implied by the fit: fitted value + z_p sqrt(mse).
double ols_quantile(const OlsFit& fit, double x_new, double p);

// ---------------------------------------------------------------------------
// Quantile regression

enum class QrMethod { Auto, Simplex, InteriorPoint };

std::string_view to_string(QrMethod m);
QrMethod qr_method_from_string(std::string_view name);

struct QrOptions {
  QrMethod method = QrMethod::Auto;
  /// Auto uses the simplex solver up to this many observations.
  std::size_t simplex_limit = 50'000;
  /// Relative duality gap at which the interior-point solver stops.
  double ipm_tolerance = 1e-8;
  std::size_t ipm_max_iterations = 500;
};

struct QuantileFit {
  double p = 0.5;
  std::vector<double> coefficients;
  DesignKind design = DesignKind::Linear;
  double achieved_loss = 0.0;  // check loss at coefficients on the training set
  QrMethod method = QrMethod::Simplex;
  std::size_t iterations = 0;
  /// Relative duality gap at exit; 0 for simplex solutions.
  double duality_gap = 0.0;
  /// Observation indices interpolated by a simplex solution.
  std::vector<std::size_t> basis;
};

/// Sum over observations of rho_p(y - fitted), rho_p(r) = r (p - [r < 0]).
double pinball_loss(std::span<const double> x, std::span<const double> y, double p, DesignKind design,
                    std::span<const double> coef);

/// Linear quantile regression of y on the design of x at probability p.
///
/// The simplex route returns an exact basic solution (k interpolated
/// observations). The interior-point route stops at a relative duality gap of
/// options.ipm_tolerance and throws ConvergenceError if it cannot get there.
QuantileFit qr_fit(std::span<const double> x, std::span<const double> y, double p, DesignKind design,
                   const QrOptions& options = {});

double qr_predict(const QuantileFit& fit, double x_new);

}  // namespace qavg::regress
