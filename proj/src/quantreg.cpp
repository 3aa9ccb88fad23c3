#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gram.hpp"
#include "qavg/error.hpp"
#include "qavg/kernels.hpp"
#include "qavg/regress.hpp"

namespace qavg::regress {

std::string_view to_string(QrMethod m) {
  switch (m) {
    case QrMethod::Auto: return "auto";
    case QrMethod::Simplex: return "simplex";
    case QrMethod::InteriorPoint: return "interior-point";
  }
  return "?";
}

QrMethod qr_method_from_string(std::string_view name) {
  for (QrMethod m : {QrMethod::Auto, QrMethod::Simplex, QrMethod::InteriorPoint})
    if (name == to_string(m)) return m;
  throw ConfigError("unknown quantile regression method '" + std::string(name) + "'");
}

double pinball_loss(std::span<const double> x, std::span<const double> y, double p, DesignKind design,
                    std::span<const double> coef) {
  if (x.size() != y.size()) throw ShapeError("pinball_loss: x and y lengths differ");
  if (coef.size() != coefficient_count(design)) throw ShapeError("pinball_loss: coefficient count mismatch");
  std::vector<double> resid(x.size());
  kernels::design_eval(x, coef, resid);
  kernels::difference(y, resid, resid);
  return kernels::pinball_sum(resid, p);
}

double qr_predict(const QuantileFit& fit, double x_new) { return evaluate(fit.coefficients, fit.design, x_new); }

namespace {

struct Problem {
  std::span<const double> x;
  std::span<const double> y;
  DesignKind design;
  std::size_t k;
  double p;
};

double row_dot(double xi, DesignKind d, const Eigen::VectorXd& v) {
  double s = v(0) + xi * v(1);
  if (d == DesignKind::Quadratic) s += (xi * xi) * v(2);
  return s;
}

// Exterior-point simplex over basic solutions.
//
// A vertex is a set h of k observations whose design rows are independent;
// the coefficient vector interpolates them. Each of the 2k edges leaving a
// vertex frees one interpolated observation in one direction. The solver takes
// the edge with the most negative directional derivative and minimises the
// (convex, piecewise-linear) loss exactly along it, which may pass through
// several vertices at once: the step stops at the breakpoint where the
// accumulated slope turns non-negative, and that observation enters the basis.
// The loss strictly decreases at every pivot, so no vertex repeats.
//
// A vertex with no descending edge is optimal whenever only the k basis
// observations have zero residual, which holds with probability one for
// continuous data. Exact-fit data sit at zero loss and are optimal trivially.
class SimplexSolver {
 public:
  explicit SimplexSolver(const Problem& pr) : pr_(pr), n_(pr.x.size()), k_(pr.k) {
    double scale = 1.0;
    for (double v : pr.y) scale = std::max(scale, std::fabs(v));
    zero_tol_ = 1e-11 * scale;
    resid_.resize(n_);
    delta_.resize(n_);
    in_basis_.assign(n_, 0);
  }

  QuantileFit solve() {
    beta_ = start_point();
    update_residuals();
    while (basis_.size() < k_) grow_basis();
    refit_from_basis();

    std::size_t iterations = 0;
    const std::size_t max_iterations = 10 * n_ + 100;
    while (pivot()) {
      if (++iterations > max_iterations) {
        throw ConvergenceError("quantile regression simplex exceeded " + std::to_string(max_iterations) +
                                   " pivots",
                               std::numeric_limits<double>::quiet_NaN());
      }
    }

    QuantileFit fit;
    fit.p = pr_.p;
    fit.design = pr_.design;
    fit.coefficients.assign(beta_.data(), beta_.data() + k_);
    fit.method = QrMethod::Simplex;
    fit.iterations = iterations;
    fit.basis = basis_;
    fit.achieved_loss = pinball_loss(pr_.x, pr_.y, pr_.p, pr_.design, fit.coefficients);
    return fit;
  }

 private:
  Eigen::VectorXd start_point() const {
    if (n_ > k_) {
      try {
        const auto ols = ols_fit(pr_.x, pr_.y, pr_.design);
        return Eigen::Map<const Eigen::VectorXd>(ols.coefficients.data(), static_cast<Eigen::Index>(k_));
      } catch (const SingularityError&) {
        // The basis search below reports the singularity.
      }
    }
    return Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k_));
  }

  void update_residuals() {
    for (std::size_t i = 0; i < n_; ++i) resid_[i] = pr_.y[i] - row_dot(pr_.x[i], pr_.design, beta_);
  }

  // One-sided derivative of rho_p(r) when r moves at rate `rate`.
  double slope(double r, double rate) const {
    const double p = pr_.p;
    if (r > zero_tol_) return p * rate;
    if (r < -zero_tol_) return (p - 1.0) * rate;
    return rate > 0.0 ? p * rate : (p - 1.0) * rate;
  }

  // delta_[i] = x_i' d for every observation.
  void project(const Eigen::VectorXd& d) {
    for (std::size_t i = 0; i < n_; ++i) delta_[i] = row_dot(pr_.x[i], pr_.design, d);
  }

  struct Rates {
    double forward = 0.0;   // derivative along +d over non-basis observations
    double backward = 0.0;  // derivative along -d
    double magnitude = 0.0;
  };

  Rates non_basis_rates() const {
    Rates rates;
    for (std::size_t i = 0; i < n_; ++i) {
      if (in_basis_[i]) continue;
      // Residuals move at -delta along +d.
      rates.forward += slope(resid_[i], -delta_[i]);
      rates.backward += slope(resid_[i], delta_[i]);
      rates.magnitude += std::fabs(delta_[i]);
    }
    return rates;
  }

  double descent_tolerance(double magnitude) const { return 1e-12 * (magnitude + 1.0); }

  // Exact minimisation of the loss along beta + t * sign * d, t >= 0, starting
  // from derivative `rate` (< 0 for descent). delta holds x_i' d.
  std::pair<double, std::size_t> line_search(const std::vector<double>& delta, double sign, double rate) {
    breaks_.clear();
    for (std::size_t i = 0; i < n_; ++i) {
      if (in_basis_[i]) continue;
      const double di = sign * delta[i];
      const double r = resid_[i];
      if (di == 0.0 || std::fabs(r) <= zero_tol_) continue;
      const double t = r / di;
      if (t > 0.0) breaks_.emplace_back(t, i);
    }
    std::sort(breaks_.begin(), breaks_.end());
    double acc = rate;
    for (const auto& [t, i] : breaks_) {
      acc += std::fabs(delta[i]);
      if (acc >= 0.0) return {t, i};
    }
    throw SingularityError("quantile regression: loss unbounded along search direction");
  }

  // Phase one: add observations until k rows are interpolated.
  void grow_basis() {
    const Eigen::VectorXd d = null_direction();
    project(d);
    for (std::size_t h : basis_) delta_[h] = 0.0;
    const Rates rates = non_basis_rates();
    if (rates.magnitude == 0.0) throw SingularityError("quantile regression: design matrix is rank deficient");

    const double sign = rates.forward <= rates.backward ? 1.0 : -1.0;
    const double rate = std::min(rates.forward, rates.backward);
    const double tol = descent_tolerance(rates.magnitude);

    std::size_t entering = n_;
    double step = 0.0;
    if (rate >= -tol) {
      // Already minimal along this line; an observation with zero residual
      // and independent row can join without moving.
      for (std::size_t i = 0; i < n_; ++i) {
        if (!in_basis_[i] && std::fabs(resid_[i]) <= zero_tol_ && std::fabs(delta_[i]) > 1e-12) {
          entering = i;
          break;
        }
      }
    }
    if (entering == n_) std::tie(step, entering) = line_search(delta_, sign, std::min(rate, 0.0));

    beta_ += (step * sign) * d;
    basis_.push_back(entering);
    in_basis_[entering] = 1;
    update_residuals();
  }

  // Unit vector orthogonal to the rows of the current (partial) basis.
  Eigen::VectorXd null_direction() const {
    std::vector<Eigen::VectorXd> q;
    for (std::size_t h : basis_) {
      const auto row = design_row(pr_.x[h], pr_.design);
      Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(row.data(), static_cast<Eigen::Index>(k_));
      for (const auto& u : q) v -= u.dot(v) * u;
      if (v.norm() > 0.0) q.push_back(v.normalized());
    }
    Eigen::VectorXd best = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k_));
    double best_norm = -1.0;
    for (std::size_t c = 0; c < k_; ++c) {
      Eigen::VectorXd v = Eigen::VectorXd::Unit(static_cast<Eigen::Index>(k_), static_cast<Eigen::Index>(c));
      for (const auto& u : q) v -= u.dot(v) * u;
      if (v.norm() > best_norm + 1e-12) {
        best_norm = v.norm();
        best = v;
      }
    }
    return best / best_norm;
  }

  Eigen::MatrixXd basis_matrix() const {
    Eigen::MatrixXd xb(k_, k_);
    for (std::size_t l = 0; l < k_; ++l) {
      const auto row = design_row(pr_.x[basis_[l]], pr_.design);
      for (std::size_t c = 0; c < k_; ++c) xb(l, c) = row[c];
    }
    return xb;
  }

  void refit_from_basis() {
    const Eigen::MatrixXd xb = basis_matrix();
    Eigen::VectorXd yb(k_);
    for (std::size_t l = 0; l < k_; ++l) yb(l) = pr_.y[basis_[l]];
    beta_ = xb.fullPivLu().solve(yb);
    update_residuals();
    for (std::size_t h : basis_) resid_[h] = 0.0;
  }

  // One pivot; returns false at optimality. Edges are scanned in basis-slot
  // order, forward before backward; the steepest wins and ties keep the
  // earliest edge.
  bool pivot() {
    const Eigen::MatrixXd inv = basis_matrix().inverse();
    double best_rate = 0.0;
    double best_sign = 1.0;
    std::size_t best_slot = k_;
    for (std::size_t slot = 0; slot < k_; ++slot) {
      const Eigen::VectorXd d = inv.col(static_cast<Eigen::Index>(slot));
      project(d);
      for (std::size_t l = 0; l < k_; ++l) delta_[basis_[l]] = l == slot ? 1.0 : 0.0;
      const Rates rates = non_basis_rates();
      // The freed observation's residual leaves zero at rate -1 (forward) or +1.
      const double forward = rates.forward + (1.0 - pr_.p);
      const double backward = rates.backward + pr_.p;
      const double tol = descent_tolerance(rates.magnitude);
      bool improved = false;
      if (forward < -tol && forward < best_rate) {
        best_rate = forward;
        best_sign = 1.0;
        improved = true;
      }
      if (backward < -tol && backward < best_rate) {
        best_rate = backward;
        best_sign = -1.0;
        improved = true;
      }
      if (improved) {
        best_slot = slot;
        best_delta_ = delta_;
      }
    }
    if (best_slot == k_) return false;

    // Basis residuals are exactly zero, so the line search skips them.
    const std::size_t entering = line_search(best_delta_, best_sign, best_rate).second;
    in_basis_[basis_[best_slot]] = 0;
    basis_[best_slot] = entering;
    in_basis_[entering] = 1;
    refit_from_basis();
    return true;
  }

  const Problem& pr_;
  std::size_t n_;
  std::size_t k_;
  double zero_tol_ = 0.0;
  Eigen::VectorXd beta_;
  std::vector<double> resid_;
  std::vector<double> delta_;
  std::vector<double> best_delta_;
  std::vector<char> in_basis_;
  std::vector<std::size_t> basis_;
  std::vector<std::pair<double, std::size_t>> breaks_;
};

// Primal-dual interior point (Frisch-Newton with Mehrotra's predictor-corrector)
// on the bounded dual of the quantile regression LP:
//   max y'a  s.t.  X'a = (1 - p) X'1,  0 <= a <= 1.
// The multipliers of the equality constraint are the negated coefficients.
class InteriorPointSolver {
 public:
  InteriorPointSolver(const Problem& pr, const QrOptions& options) : pr_(pr), opt_(options), n_(pr.x.size()) {}

  QuantileFit solve() {
    const std::size_t k = pr_.k;
    const double p = pr_.p;
    const double nd = static_cast<double>(n_);

    std::vector<double> a(n_, 1.0 - p), s(n_, p), z(n_), w(n_);
    std::vector<double> da(n_), dz(n_), dw(n_), q(n_), dinv(n_), rd(n_);

    // b = (1 - p) X'1; a = (1 - p) 1 is exactly primal feasible.
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto row = design_row(pr_.x[i], pr_.design);
      for (std::size_t c = 0; c < k; ++c) b(c) += (1.0 - p) * row[c];
    }

    // Dual start from least squares: lambda = -beta_ols, z - w = c - X lambda.
    const Eigen::MatrixXd g = detail::gram(pr_.x, pr_.design);
    Eigen::VectorXd lambda = -detail::factor_gram(g).solve(detail::cross(pr_.x, pr_.y, pr_.design));
    // Move the intercept to the empirical p-quantile of the residuals; tail
    // quantiles otherwise spend most iterations crossing the bulk of the data.
    {
      std::vector<double> r(n_);
      for (std::size_t i = 0; i < n_; ++i) r[i] = pr_.y[i] + row_dot(pr_.x[i], pr_.design, lambda);
      const auto nth = r.begin() + static_cast<std::ptrdiff_t>(p * static_cast<double>(n_ - 1));
      std::nth_element(r.begin(), nth, r.end());
      lambda(0) -= *nth;
    }
    double mean_abs = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      mean_abs += std::fabs(-pr_.y[i] - row_dot(pr_.x[i], pr_.design, lambda));
    }
    const double shift = 0.03 * mean_abs / nd + 1e-10;
    for (std::size_t i = 0; i < n_; ++i) {
      const double rho = -pr_.y[i] - row_dot(pr_.x[i], pr_.design, lambda);
      z[i] = std::max(rho, 0.0) + shift;
      w[i] = std::max(-rho, 0.0) + shift;
    }

    double gap = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    for (; it < opt_.ipm_max_iterations; ++it) {
      // Residuals and convergence.
      Eigen::VectorXd rp = b;
      double comp = 0.0;
      double dual_obj = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const auto row = design_row(pr_.x[i], pr_.design);
        for (std::size_t c = 0; c < k; ++c) rp(c) -= row[c] * a[i];
        rd[i] = -pr_.y[i] - row_dot(pr_.x[i], pr_.design, lambda) - z[i] + w[i];
        comp += a[i] * z[i] + s[i] * w[i];
        dual_obj += pr_.y[i] * (a[i] - (1.0 - p));
      }
      gap = comp / (1.0 + std::fabs(dual_obj));
      if (gap < opt_.ipm_tolerance) break;
      const double mu = comp / (2.0 * nd);

      // Normal matrix X' D X with D = (z/a + w/s)^-1.
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(k, k);
      for (std::size_t i = 0; i < n_; ++i) {
        dinv[i] = 1.0 / (z[i] / a[i] + w[i] / s[i]);
        const auto row = design_row(pr_.x[i], pr_.design);
        for (std::size_t r = 0; r < k; ++r)
          for (std::size_t c = r; c < k; ++c) m(r, c) += dinv[i] * row[r] * row[c];
      }
      for (std::size_t r = 0; r < k; ++r)
        for (std::size_t c = 0; c < r; ++c) m(r, c) = m(c, r);
      const Eigen::LLT<Eigen::MatrixXd> llt(m);
      if (llt.info() != Eigen::Success) throw ConvergenceError("interior point: normal matrix lost definiteness", gap);

      // Newton direction for complementarity targets (az, sw).
      auto direction = [&](auto&& target_az, auto&& target_sw) {
        Eigen::VectorXd rhs = rp;
        for (std::size_t i = 0; i < n_; ++i) {
          const double raz = target_az(i);
          const double rsw = target_sw(i);
          q[i] = rd[i] - raz / a[i] + rsw / s[i];
          const auto row = design_row(pr_.x[i], pr_.design);
          for (std::size_t c = 0; c < k; ++c) rhs(c) += dinv[i] * q[i] * row[c];
        }
        const Eigen::VectorXd dl = llt.solve(rhs);
        for (std::size_t i = 0; i < n_; ++i) {
          da[i] = dinv[i] * (row_dot(pr_.x[i], pr_.design, dl) - q[i]);
          dz[i] = (target_az(i) - z[i] * da[i]) / a[i];
          dw[i] = (target_sw(i) + w[i] * da[i]) / s[i];
        }
        return dl;
      };
      auto step_lengths = [&] {
        double ap = 1.0, ad = 1.0;
        for (std::size_t i = 0; i < n_; ++i) {
          if (da[i] < 0.0) ap = std::min(ap, -a[i] / da[i]);
          if (da[i] > 0.0) ap = std::min(ap, s[i] / da[i]);
          if (dz[i] < 0.0) ad = std::min(ad, -z[i] / dz[i]);
          if (dw[i] < 0.0) ad = std::min(ad, -w[i] / dw[i]);
        }
        return std::pair{ap, ad};
      };

      // Predictor.
      direction([&](std::size_t i) { return -a[i] * z[i]; }, [&](std::size_t i) { return -s[i] * w[i]; });
      const auto [ap_aff, ad_aff] = step_lengths();
      double mu_aff = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        mu_aff += (a[i] + ap_aff * da[i]) * (z[i] + ad_aff * dz[i]) + (s[i] - ap_aff * da[i]) * (w[i] + ad_aff * dw[i]);
      }
      mu_aff /= 2.0 * nd;
      const double sigma = std::pow(mu_aff / mu, 3.0);
      const double target = sigma * mu;

      // Corrector, with second-order terms of the affine step.
      std::vector<double> cz(n_), cw(n_);
      for (std::size_t i = 0; i < n_; ++i) {
        cz[i] = target - a[i] * z[i] - da[i] * dz[i];
        cw[i] = target - s[i] * w[i] + da[i] * dw[i];
      }
      const Eigen::VectorXd dl = direction([&](std::size_t i) { return cz[i]; }, [&](std::size_t i) { return cw[i]; });
      auto [ap, ad] = step_lengths();
      // A step factor well short of the boundary keeps iterates central; on
      // pooled ensemble data 0.99995 needs several times more iterations.
      ap = std::min(1.0, 0.9 * ap);
      ad = std::min(1.0, 0.9 * ad);

      for (std::size_t i = 0; i < n_; ++i) {
        a[i] += ap * da[i];
        s[i] -= ap * da[i];
        z[i] += ad * dz[i];
        w[i] += ad * dw[i];
      }
      lambda += ad * dl;
    }
    if (!(gap < opt_.ipm_tolerance)) {
      throw ConvergenceError("interior point did not reach tolerance in " + std::to_string(it) + " iterations", gap);
    }

    QuantileFit fit;
    fit.p = p;
    fit.design = pr_.design;
    fit.coefficients.resize(k);
    for (std::size_t c = 0; c < k; ++c) fit.coefficients[c] = -lambda(static_cast<Eigen::Index>(c));
    fit.method = QrMethod::InteriorPoint;
    fit.iterations = it;
    fit.duality_gap = gap;
    fit.achieved_loss = pinball_loss(pr_.x, pr_.y, p, pr_.design, fit.coefficients);
    return fit;
  }

 private:
  const Problem& pr_;
  const QrOptions& opt_;
  std::size_t n_;
};

}  // namespace

QuantileFit qr_fit(std::span<const double> x, std::span<const double> y, double p, DesignKind design,
                   const QrOptions& options) {
  if (x.size() != y.size()) throw ShapeError("qr_fit: x and y lengths differ");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("qr_fit: p must lie in (0, 1)");
  const std::size_t k = coefficient_count(design);
  if (x.empty()) throw InsufficientDataError("qr_fit: empty training set");
  if (x.size() < k) {
    throw InsufficientDataError("qr_fit: need at least " + std::to_string(k) + " observations, got " +
                                std::to_string(x.size()));
  }
  const Problem problem{x, y, design, k, p};
  QrMethod method = options.method;
  if (method == QrMethod::Auto) {
    method = x.size() <= options.simplex_limit ? QrMethod::Simplex : QrMethod::InteriorPoint;
  }
  if (method == QrMethod::Simplex) return SimplexSolver(problem).solve();
  return InteriorPointSolver(problem, options).solve();
}

}  // namespace qavg::regress
