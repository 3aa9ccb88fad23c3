#include "kernels_internal.hpp"

namespace qavg::kernels::detail {
namespace {

void design_eval(const double* x, std::size_t n, const double* c, std::size_t k, double* out) {
  if (k == 3) {
    for (std::size_t t = 0; t < n; ++t) out[t] = (c[0] + c[1] * x[t]) + c[2] * (x[t] * x[t]);
  } else {
    for (std::size_t t = 0; t < n; ++t) out[t] = c[0] + c[1] * x[t];
  }
}

void affine(const double* x, std::size_t n, double a, double b, double* out) {
  for (std::size_t t = 0; t < n; ++t) out[t] = a * x[t] + b;
}

void affine_accumulate(const double* x, std::size_t n, double a, double b, double* acc) {
  for (std::size_t t = 0; t < n; ++t) acc[t] = acc[t] + (a * x[t] + b);
}

void difference(const double* a, const double* b, std::size_t n, double* out) {
  for (std::size_t t = 0; t < n; ++t) out[t] = a[t] - b[t];
}

IntervalSums interval_sums(const double* lo, const double* hi, const double* y, std::size_t n) {
  IntervalSums s;
  for (std::size_t t = 0; t < n; ++t) {
    s.width += hi[t] - lo[t];
    if (y[t] < lo[t]) s.penalty += lo[t] - y[t];
    if (y[t] > hi[t]) s.penalty += y[t] - hi[t];
    if (y[t] >= lo[t] && y[t] <= hi[t]) ++s.covered;
    if (lo[t] > hi[t]) ++s.crossings;
  }
  return s;
}

double pinball_sum(const double* r, std::size_t n, double p) {
  double sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) sum += r[t] < 0.0 ? (p - 1.0) * r[t] : p * r[t];
  return sum;
}

}  // namespace

const KernelTable kScalarTable{
    "scalar", design_eval, affine, affine_accumulate, difference, interval_sums, pinball_sum,
};

}  // namespace qavg::kernels::detail
