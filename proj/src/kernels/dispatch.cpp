#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"
#include "qavg/error.hpp"

namespace qavg::kernels {

const KernelTable& scalar_table() { return detail::kScalarTable; }

const KernelTable* avx2_table() {
#ifdef QAVG_HAVE_AVX2_KERNELS
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") != 0;
  }();
  return supported ? &detail::kAvx2Table : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() {
  static const KernelTable& table = []() -> const KernelTable& {
    const char* force = std::getenv("QAVG_SIMD");
    if (force != nullptr && std::string(force) == "scalar") return scalar_table();
    if (const KernelTable* simd = avx2_table()) return *simd;
    return scalar_table();
  }();
  return table;
}

namespace {

void require_same(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ShapeError(std::string(what) + ": length mismatch (" + std::to_string(a) + " vs " +
                     std::to_string(b) + ")");
  }
}

}  // namespace

void design_eval(std::span<const double> x, std::span<const double> coef, std::span<double> out) {
  require_same(x.size(), out.size(), "design_eval");
  if (coef.size() != 2 && coef.size() != 3) throw ShapeError("design_eval: expected 2 or 3 coefficients");
  active().design_eval(x.data(), x.size(), coef.data(), coef.size(), out.data());
}

void affine(std::span<const double> x, double a, double b, std::span<double> out) {
  require_same(x.size(), out.size(), "affine");
  active().affine(x.data(), x.size(), a, b, out.data());
}

void affine_accumulate(std::span<const double> x, double a, double b, std::span<double> acc) {
  require_same(x.size(), acc.size(), "affine_accumulate");
  active().affine_accumulate(x.data(), x.size(), a, b, acc.data());
}

void difference(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  require_same(a.size(), b.size(), "difference");
  require_same(a.size(), out.size(), "difference");
  active().difference(a.data(), b.data(), a.size(), out.data());
}

IntervalSums interval_sums(std::span<const double> lower, std::span<const double> upper,
                           std::span<const double> y) {
  require_same(lower.size(), upper.size(), "interval_sums");
  require_same(lower.size(), y.size(), "interval_sums");
  return active().interval_sums(lower.data(), upper.data(), y.data(), y.size());
}

double pinball_sum(std::span<const double> residuals, double p) {
  return active().pinball_sum(residuals.data(), residuals.size(), p);
}

}  // namespace qavg::kernels
