#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel inner loops shared by the pipeline.
//
// Every kernel has a scalar reference implementation and, on x86-64 hosts
// that report AVX2, a vectorised variant. The active table is chosen once at
// first use; setting QAVG_SIMD=scalar in the environment forces the reference
// path. Element-wise kernels are bit-identical across variants (no FMA
// contraction, same operation order per element). Reductions use four lane
// accumulators in the AVX2 variant, so they agree with the reference to
// rounding only.

namespace qavg::kernels {

/// Per-series sums needed for coverage, width and interval score.
struct IntervalSums {
  std::size_t covered = 0;    // lower <= y <= upper
  std::size_t crossings = 0;  // lower > upper
  double width = 0.0;         // sum of (upper - lower)
  double penalty = 0.0;       // sum of (lower - y)[y < lower] + (y - upper)[y > upper]
};

struct KernelTable {
  std::string_view name;
  /// out[t] = c[0] + c[1] x[t] (+ c[2] x[t]^2 when k == 3).
  void (*design_eval)(const double* x, std::size_t n, const double* coef, std::size_t k, double* out);
  /// out[t] = a * x[t] + b.
  void (*affine)(const double* x, std::size_t n, double a, double b, double* out);
  /// acc[t] += a * x[t] + b.
  void (*affine_accumulate)(const double* x, std::size_t n, double a, double b, double* acc);
  /// out[t] = a[t] - b[t].
  void (*difference)(const double* a, const double* b, std::size_t n, double* out);
  IntervalSums (*interval_sums)(const double* lower, const double* upper, const double* y, std::size_t n);
  /// Sum of the check loss rho_p(r) = r (p - [r < 0]).
  double (*pinball_sum)(const double* r, std::size_t n, double p);
};

const KernelTable& scalar_table();

/// The AVX2 table, or nullptr when the host or build lacks AVX2.
const KernelTable* avx2_table();

/// Kernel table used by the library.
const KernelTable& active();

// Span front-ends over active(). Sizes are checked and a ShapeError thrown on
// mismatch.
void design_eval(std::span<const double> x, std::span<const double> coef, std::span<double> out);
void affine(std::span<const double> x, double a, double b, std::span<double> out);
void affine_accumulate(std::span<const double> x, double a, double b, std::span<double> acc);
void difference(std::span<const double> a, std::span<const double> b, std::span<double> out);
IntervalSums interval_sums(std::span<const double> lower, std::span<const double> upper,
                           std::span<const double> y);
double pinball_sum(std::span<const double> residuals, double p);

}  // namespace qavg::kernels
