#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "qavg/error.hpp"
#include "qavg/kernels.hpp"

using namespace qavg::kernels;

namespace {

std::vector<double> random_vec(std::mt19937_64& g, std::size_t n, double scale = 3.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (auto& e : v) e = d(g);
  return v;
}

// Lengths exercise both the vector body and every tail size.
const std::size_t kLengths[] = {0, 1, 2, 3, 4, 5, 7, 8, 13, 64, 1001};

}  // namespace

TEST_CASE("dispatch picks a table and honours the scalar reference") {
  CHECK(scalar_table().name == "scalar");
  CHECK(!active().name.empty());
}

TEST_CASE("element-wise kernels are bit-identical across variants") {
  const KernelTable* simd = avx2_table();
  if (simd == nullptr) {
    MESSAGE("AVX2 not available; only the scalar table is exercised");
    return;
  }
  const KernelTable& ref = scalar_table();
  std::mt19937_64 g(5);
  for (std::size_t n : kLengths) {
    const auto x = random_vec(g, n);
    const auto y = random_vec(g, n);
    for (std::size_t k : {2u, 3u}) {
      const double coef[] = {5.0, -2.25, 0.75};
      std::vector<double> a(n), b(n);
      ref.design_eval(x.data(), n, coef, k, a.data());
      simd->design_eval(x.data(), n, coef, k, b.data());
      CHECK(a == b);
    }
    std::vector<double> a(n), b(n);
    ref.affine(x.data(), n, 0.3, -1.7, a.data());
    simd->affine(x.data(), n, 0.3, -1.7, b.data());
    CHECK(a == b);

    std::vector<double> acc_a = y, acc_b = y;
    ref.affine_accumulate(x.data(), n, -1.1, 2.0, acc_a.data());
    simd->affine_accumulate(x.data(), n, -1.1, 2.0, acc_b.data());
    CHECK(acc_a == acc_b);

    ref.difference(x.data(), y.data(), n, a.data());
    simd->difference(x.data(), y.data(), n, b.data());
    CHECK(a == b);
  }
}

TEST_CASE("reductions agree across variants to rounding") {
  const KernelTable* simd = avx2_table();
  if (simd == nullptr) return;
  const KernelTable& ref = scalar_table();
  std::mt19937_64 g(6);
  for (std::size_t n : kLengths) {
    auto lo = random_vec(g, n), hi = random_vec(g, n), y = random_vec(g, n);
    for (std::size_t t = 0; t < n; ++t) {
      if (t % 5 != 0 && lo[t] > hi[t]) std::swap(lo[t], hi[t]);  // keep a few crossings
      if (t % 7 == 0) y[t] = lo[t];                               // boundary hits
    }
    const auto a = ref.interval_sums(lo.data(), hi.data(), y.data(), n);
    const auto b = simd->interval_sums(lo.data(), hi.data(), y.data(), n);
    CHECK(a.covered == b.covered);
    CHECK(a.crossings == b.crossings);
    CHECK(a.width == doctest::Approx(b.width).epsilon(1e-12));
    CHECK(a.penalty == doctest::Approx(b.penalty).epsilon(1e-12));

    for (double p : {0.005, 0.5, 0.9875}) {
      CHECK(ref.pinball_sum(y.data(), n, p) == doctest::Approx(simd->pinball_sum(y.data(), n, p)).epsilon(1e-12));
    }
  }
}

TEST_CASE("interval sums follow closed coverage and strict penalties") {
  const std::vector<double> lo{0.0, 0.0, 0.0, 0.0, 2.0};
  const std::vector<double> hi{2.0, 2.0, 2.0, 2.0, 1.0};
  const std::vector<double> y{0.0, 2.0, 3.0, -1.0, 1.5};
  const auto s = interval_sums(lo, hi, y);
  CHECK(s.covered == 2);
  CHECK(s.crossings == 1);
  CHECK(s.width == doctest::Approx(7.0));
  CHECK(s.penalty == doctest::Approx(1.0 + 1.0 + 0.5 + 0.5));
}

TEST_CASE("span front-ends reject mismatched lengths") {
  std::vector<double> a(3), b(4);
  CHECK_THROWS_AS(difference(a, b, a), qavg::ShapeError);
  CHECK_THROWS_AS(affine(a, 1.0, 0.0, b), qavg::ShapeError);
  const std::vector<double> coef(4, 1.0);
  CHECK_THROWS_AS(design_eval(a, coef, a), qavg::ShapeError);
}
