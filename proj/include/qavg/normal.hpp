#pragma once

namespace qavg::regress {

/// Standard normal CDF, evaluated through erfc for full relative accuracy in
/// the lower tail.
double norm_cdf(double z);

double norm_pdf(double z);

/// Inverse standard normal CDF (Wichura's AS241, PPND16), accurate to about
/// one part in 1e16. |norm_cdf(result) - p| < 1e-12 on (0, 1).
/// Throws DomainError unless 0 < p < 1.
double inv_norm_cdf(double p);

}  // namespace qavg::regress
