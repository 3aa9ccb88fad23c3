#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "qavg/regress.hpp"

namespace qavg::bayes {

using regress::DesignKind;

/// m joint posterior draws of (theta, sigma^2). theta is row-major m x k.
struct PosteriorDraws {
  std::size_t k = 0;
  std::vector<double> theta;
  std::vector<double> sigma2;

  std::size_t m() const { return sigma2.size(); }
  std::span<const double> row(std::size_t i) const { return std::span(theta).subspan(i * k, k); }
};

struct GibbsConfig {
  std::size_t m = 1000;
  std::size_t burn_in = 100;
  std::uint64_t seed = 1;
};

/// Two-block Gibbs sampler for the normal linear model under the flat prior on
/// theta and the 1/sigma^2 prior on the variance:
///   theta | sigma^2 ~ N(beta_ols, sigma^2 (X'X)^-1)
///   sigma^2 | theta ~ InvGamma(n/2, SSE(theta)/2)
/// Draws come from stream "gibbs" under config.seed. sigma^2 is floored at the
/// smallest normal double so exact-fit data still yields positive variances.
PosteriorDraws gibbs_sample(std::span<const double> x, std::span<const double> y, DesignKind design,
                            const GibbsConfig& config);

/// p-quantile of the equal-weight normal mixture over the draws at x_new.
/// Accurate to 1e-9 in probability; m = 1 is the plain normal quantile.
double posterior_predictive_quantile(const PosteriorDraws& draws, double x_new, double p, DesignKind design);

/// Student-t location-scale fit to an unstructured sample.
struct TNonRegFit {
  double location = 0.0;
  double scale = 1.0;  // sqrt(1 + 1/n) times the sample standard deviation
  std::size_t df = 1;  // n - 1
};

TNonRegFit t_nonreg_fit(std::span<const double> y);
double t_nonreg_quantile(const TNonRegFit& fit, double p);

double student_t_cdf(double t, double df);
/// Inverse of student_t_cdf, to 1e-10 absolute in t.
double student_t_quantile(double p, double df);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Header k,theta0,theta1[,theta2],sigma2; k counts from 1.
void write_draws_csv(const PosteriorDraws& draws, const std::filesystem::path& path);
PosteriorDraws read_draws_csv(const std::filesystem::path& path);

}  // namespace qavg::bayes
