#pragma once

// Normal-equation helpers shared by the OLS, quantile-regression and Gibbs code.

#include <Eigen/Dense>
#include <span>

#include "qavg/regress.hpp"

namespace qavg::regress::detail {

/// X'X for the design of x.
Eigen::MatrixXd gram(std::span<const double> x, DesignKind design);

/// X'y for the design of x.
Eigen::VectorXd cross(std::span<const double> x, std::span<const double> y, DesignKind design);

/// LDLT of X'X after a scale-free rank check; throws SingularityError.
Eigen::LDLT<Eigen::MatrixXd> factor_gram(const Eigen::MatrixXd& g);

}  // namespace qavg::regress::detail
