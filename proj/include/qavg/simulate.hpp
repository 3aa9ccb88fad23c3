#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace qavg::simulate {

/// Generative laws. All draw x ~ N(0, 1).
///   Toy1            y = 5 + 2x + u,        u ~ N(0, 3^2)
///   Toy2            y = 5 + 2x + u,        u ~ N(0, (0.2 (5 + 2x))^2)
///   Toy3            y = 5 + 2x + x^2 + u,  u ~ N(0, 1)
///   NonInformative  y ~ N(0, 1), independent of x
///   Toy2SdSquared   y = 5 + 2x + u,        u ~ N(0, (0.2 (5 + 2x))^4)
///
/// Toy2SdSquared passes (0.2 f)^2 as the standard deviation instead of the
/// variance. Toy experiment 2 reference results are reproduced by this law, not by Toy2.
enum class Family { Toy1, Toy2, Toy3, NonInformative, Toy2SdSquared };

std::string_view to_string(Family f);
Family family_from_string(std::string_view name);

/// Deterministic part of the family's law (zero for NonInformative).
double mean_function(Family f, double x);

/// Contiguous calibration / error-training / test periods.
struct PeriodSplit {
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::size_t n3 = 0;

  constexpr std::size_t total() const { return n1 + n2 + n3; }
  friend constexpr bool operator==(const PeriodSplit&, const PeriodSplit&) = default;
};

/// 1/12, 1/12 and the remainder: 1000/1000/10000 at n = 12000. Callers with
/// other layouts (the 100/100/100 short series) pass a split explicitly.
PeriodSplit default_split(std::size_t n);

struct SimulatorSpec {
  Family family = Family::Toy1;
  std::size_t n = 12'000;
  std::uint64_t seed = 1;
};

struct ToyDataset {
  Family family = Family::Toy1;
  std::vector<double> x;
  std::vector<double> y;
  PeriodSplit split;

  std::size_t size() const { return x.size(); }

  std::span<const double> x_t1() const { return std::span(x).first(split.n1); }
  std::span<const double> y_t1() const { return std::span(y).first(split.n1); }
  std::span<const double> x_t12() const { return std::span(x).first(split.n1 + split.n2); }
  std::span<const double> y_t12() const { return std::span(y).first(split.n1 + split.n2); }
  std::span<const double> x_t2() const { return std::span(x).subspan(split.n1, split.n2); }
  std::span<const double> y_t2() const { return std::span(y).subspan(split.n1, split.n2); }
  std::span<const double> x_t23() const { return std::span(x).subspan(split.n1); }
  std::span<const double> x_t3() const { return std::span(x).subspan(split.n1 + split.n2); }
  std::span<const double> y_t3() const { return std::span(y).subspan(split.n1 + split.n2); }
};

/// Draws n i.i.d. pairs. x comes from stream "simulate/x" and the noise from
/// "simulate/u", so (family, n, seed) fixes the output bit for bit.
ToyDataset simulate(const SimulatorSpec& spec, PeriodSplit split);
ToyDataset simulate(const SimulatorSpec& spec);

/// Header t,x,y,period with t counted from 1 and period in {T1,T2,T3}.
void write_csv(const ToyDataset& data, const std::filesystem::path& path);
void write_csv(const ToyDataset& data, std::ostream& out);

/// Reads the format written by write_csv. Periods must be contiguous and in
/// order; the family is not stored and comes back as Toy1.
ToyDataset read_csv(const std::filesystem::path& path);

}  // namespace qavg::simulate
