#include "qavg/bayes.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cfloat>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "gram.hpp"
#include "qavg/csv.hpp"
#include "qavg/error.hpp"
#include "qavg/normal.hpp"
#include "qavg/rng.hpp"

namespace qavg::bayes {

using regress::coefficient_count;
using regress::inv_norm_cdf;
using regress::norm_cdf;
using regress::norm_pdf;

PosteriorDraws gibbs_sample(std::span<const double> x, std::span<const double> y, DesignKind design,
                            const GibbsConfig& config) {
  if (x.size() != y.size()) throw ShapeError("gibbs_sample: x and y lengths differ");
  if (config.m == 0) throw ConfigError("gibbs_sample: m must be at least 1");
  const std::size_t n = x.size();
  const std::size_t k = coefficient_count(design);
  if (n <= k) throw InsufficientDataError("gibbs_sample: need more than " + std::to_string(k) + " observations");

  const regress::OlsFit ols = regress::ols_fit(x, y, design);
  const Eigen::MatrixXd g = regress::detail::gram(x, design);
  const Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) throw SingularityError("gibbs_sample: X'X is not positive definite");
  const Eigen::Map<const Eigen::VectorXd> beta(ols.coefficients.data(), static_cast<Eigen::Index>(k));
  const double sse_min = ols.mse * static_cast<double>(n - k);

  Rng rng(config.seed, "gibbs");
  const double shape = 0.5 * static_cast<double>(n);
  double sigma2 = std::max(ols.mse, DBL_MIN);
  Eigen::VectorXd theta = beta;
  Eigen::VectorXd z(k);

  PosteriorDraws out;
  out.k = k;
  out.theta.reserve(config.m * k);
  out.sigma2.reserve(config.m);
  for (std::size_t sweep = 0; sweep < config.burn_in + config.m; ++sweep) {
    // theta = beta + sigma L^-T z has covariance sigma^2 (L L')^-1.
    for (std::size_t j = 0; j < k; ++j) z(static_cast<Eigen::Index>(j)) = rng.normal();
    const Eigen::VectorXd dev = llt.matrixU().solve(z) * std::sqrt(sigma2);
    theta = beta + dev;

    // SSE(theta) = SSE(beta) + dev' X'X dev, exact for the least-squares beta.
    const double sse = sse_min + dev.dot(g * dev);
    sigma2 = std::max(0.5 * sse / rng.gamma(shape), DBL_MIN);

    if (sweep >= config.burn_in) {
      out.theta.insert(out.theta.end(), theta.data(), theta.data() + k);
      out.sigma2.push_back(sigma2);
    }
  }
  return out;
}

double posterior_predictive_quantile(const PosteriorDraws& draws, double x_new, double p, DesignKind design) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("posterior_predictive_quantile: p must lie in (0, 1)");
  const std::size_t m = draws.m();
  if (m == 0) throw InsufficientDataError("posterior_predictive_quantile: no draws");
  if (draws.k != coefficient_count(design)) throw ShapeError("posterior_predictive_quantile: design mismatch");

  const double zp = inv_norm_cdf(p);
  std::vector<double> mu(m), sd(m);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < m; ++i) {
    mu[i] = regress::evaluate(draws.row(i), design, x_new);
    sd[i] = std::sqrt(draws.sigma2[i]);
    const double q = mu[i] + sd[i] * zp;
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  if (m == 1 || lo == hi) return lo;

  // Every component sits at probability p somewhere in [lo, hi], so the
  // mixture CDF brackets p there. Newton steps, falling back to bisection
  // whenever a step leaves the bracket.
  const double inv_m = 1.0 / static_cast<double>(m);
  auto cdf = [&](double q, double& dens) {
    double f = 0.0;
    dens = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double u = (q - mu[i]) / sd[i];
      f += norm_cdf(u);
      dens += norm_pdf(u) / sd[i];
    }
    dens *= inv_m;
    return f * inv_m;
  };

  double q = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double dens = 0.0;
    const double f = cdf(q, dens);
    if (std::fabs(f - p) <= 1e-9) return q;
    (f < p ? lo : hi) = q;
    double next = dens > 0.0 ? q - (f - p) / dens : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == q || hi - lo <= 4.0 * DBL_EPSILON * std::max(1.0, std::fabs(q))) return next;
    q = next;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Student-t

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int i = 1; i <= 10000; ++i) {
    const double m = i;
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) return h;
  }
  throw ConvergenceError("incomplete beta continued fraction did not converge", 0.0);
}

// Stirling remainder lgamma(z) - [(z - 1/2) log z - z + log(2 pi)/2], z >= 10.
double stirling_remainder(double z) {
  const double r = 1.0 / (z * z);
  return (1.0 / 12.0 - r * (1.0 / 360.0 - r * (1.0 / 1260.0 - r * (1.0 / 1680.0 - r / 1188.0)))) / z;
}

// log B(a, b) without the cancellation lgamma suffers when one argument is large.
double log_beta(double a, double b) {
  const double big = std::max(a, b), small = std::min(a, b);
  if (big < 10.0) return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  // lgamma(big + small) - lgamma(big) via the Stirling series.
  const double diff = (big - 0.5) * std::log1p(small / big) + small * std::log(big + small) - small +
                      stirling_remainder(big + small) - stirling_remainder(big);
  return std::lgamma(small) - diff;
}

}  // namespace

namespace {

// I_x(a, b) with y = 1 - x supplied separately, so callers that know 1 - x
// exactly do not lose it to cancellation.
double incomplete_beta_xy(double a, double b, double x, double y) {
  if (x == 0.0 || y == 0.0) return x == 0.0 ? 0.0 : 1.0;
  const double log_x = x < 0.5 ? std::log(x) : std::log1p(-y);
  const double log_y = y < 0.5 ? std::log(y) : std::log1p(-x);
  const double front = std::exp(a * log_x + b * log_y - log_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw DomainError("incomplete_beta: a and b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete_beta: x must lie in [0, 1]");
  return incomplete_beta_xy(a, b, x, 1.0 - x);
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw DomainError("student_t_cdf: df must be positive");
  if (std::isnan(t)) return t;
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double t2 = t * t;
  const double tail = 0.5 * incomplete_beta_xy(0.5 * df, 0.5, df / (df + t2), t2 / (df + t2));
  return t > 0.0 ? 1.0 - tail : tail;
}

namespace {

double student_t_pdf(double t, double df) {
  const double log_c = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * M_PI);
  return std::exp(log_c - 0.5 * (df + 1.0) * std::log1p(t * t / df));
}

}  // namespace

double student_t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("student_t_quantile: p must lie in (0, 1)");
  if (!(df > 0.0)) throw DomainError("student_t_quantile: df must be positive");
  if (p == 0.5) return 0.0;
  // Solve in the upper tail and reflect, so the CDF never rounds to 1.
  const double pu = p > 0.5 ? p : 1.0 - p;
  const double sign = p > 0.5 ? 1.0 : -1.0;

  double lo = 0.0, hi = std::max(1.0, inv_norm_cdf(pu));
  while (student_t_cdf(hi, df) < pu) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw ConvergenceError("student_t_quantile: quantile is not finite", 0.0);
  }
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 300; ++it) {
    const double f = student_t_cdf(t, df) - pu;
    (f < 0.0 ? lo : hi) = t;
    double next = t - f / student_t_pdf(t, df);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::fabs(next - t);
    t = next;
    if (step < 1e-12 * std::max(1.0, t) || hi - lo < 1e-12 * std::max(1.0, t)) break;
  }
  return sign * t;
}

TNonRegFit t_nonreg_fit(std::span<const double> y) {
  const std::size_t n = y.size();
  if (n < 2) throw InsufficientDataError("t_nonreg_fit: need at least 2 observations");
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return {mean, std::sqrt(1.0 + 1.0 / static_cast<double>(n)) * sd, n - 1};
}

double t_nonreg_quantile(const TNonRegFit& fit, double p) {
  return fit.location + fit.scale * student_t_quantile(p, static_cast<double>(fit.df));
}

// ---------------------------------------------------------------------------
// CSV

void write_draws_csv(const PosteriorDraws& draws, const std::filesystem::path& path) {
  auto out = csv::open_output(path);
  std::vector<std::string> fields{"k"};
  for (std::size_t j = 0; j < draws.k; ++j) fields.push_back("theta" + std::to_string(j));
  fields.emplace_back("sigma2");
  csv::write_row(out, fields);
  for (std::size_t i = 0; i < draws.m(); ++i) {
    fields.assign({std::to_string(i + 1)});
    for (double v : draws.row(i)) fields.push_back(csv::format_double(v));
    fields.push_back(csv::format_double(draws.sigma2[i]));
    csv::write_row(out, fields);
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

PosteriorDraws read_draws_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  PosteriorDraws d;
  d.k = table.header.size() >= 2 ? table.header.size() - 2 : 0;
  if (d.k != 2 && d.k != 3) throw IoError(path.string() + ": expected 2 or 3 theta columns");
  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < d.k; ++j) cols.push_back(table.column("theta" + std::to_string(j)));
  const std::size_t cs = table.column("sigma2");
  for (const auto& row : table.rows) {
    for (auto c : cols) d.theta.push_back(csv::parse_double(row[c]));
    d.sigma2.push_back(csv::parse_double(row[cs]));
  }
  return d;
}

}  // namespace qavg::bayes
