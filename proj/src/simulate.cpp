#include "qavg/simulate.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "qavg/csv.hpp"
#include "qavg/error.hpp"
#include "qavg/rng.hpp"

namespace qavg::simulate {

std::string_view to_string(Family f) {
  switch (f) {
    case Family::Toy1: return "toy1";
    case Family::Toy2: return "toy2";
    case Family::Toy3: return "toy3";
    case Family::NonInformative: return "noninformative";
    case Family::Toy2SdSquared: return "toy2_sdsq";
  }
  return "?";
}

Family family_from_string(std::string_view name) {
  for (Family f : {Family::Toy1, Family::Toy2, Family::Toy3, Family::NonInformative, Family::Toy2SdSquared})
    if (name == to_string(f)) return f;
  throw ConfigError("unknown dataset family '" + std::string(name) + "'");
}

double mean_function(Family f, double x) {
  switch (f) {
    case Family::Toy1:
    case Family::Toy2:
    case Family::Toy2SdSquared: return 5.0 + 2.0 * x;
    case Family::Toy3: return 5.0 + 2.0 * x + x * x;
    case Family::NonInformative: return 0.0;
  }
  throw ConfigError("unknown dataset family");
}

PeriodSplit default_split(std::size_t n) {
  const std::size_t head = n / 12;
  return {head, head, n - 2 * head};
}

ToyDataset simulate(const SimulatorSpec& spec, PeriodSplit split) {
  if (split.total() != spec.n) {
    throw ConfigError("period split " + std::to_string(split.n1) + "/" + std::to_string(split.n2) + "/" +
                      std::to_string(split.n3) + " does not sum to n=" + std::to_string(spec.n));
  }
  if (static_cast<unsigned>(spec.family) > static_cast<unsigned>(Family::Toy2SdSquared)) {
    throw ConfigError("unknown dataset family");
  }
  const double u_sd = spec.family == Family::Toy1 ? 3.0 : 1.0;

  ToyDataset d;
  d.family = spec.family;
  d.split = split;
  d.x.resize(spec.n);
  d.y.resize(spec.n);
  Rng rx(spec.seed, "simulate/x");
  Rng ru(spec.seed, "simulate/u");
  for (std::size_t t = 0; t < spec.n; ++t) {
    const double x = rx.normal();
    const double f = mean_function(spec.family, x);
    double sd = u_sd;
    if (spec.family == Family::Toy2) sd = 0.2 * std::fabs(f);
    if (spec.family == Family::Toy2SdSquared) sd = 0.04 * f * f;
    d.x[t] = x;
    d.y[t] = f + sd * ru.normal();
  }
  return d;
}

ToyDataset simulate(const SimulatorSpec& spec) { return simulate(spec, default_split(spec.n)); }

void write_csv(const ToyDataset& data, std::ostream& out) {
  out << "t,x,y,period\n";
  const std::size_t b1 = data.split.n1;
  const std::size_t b2 = b1 + data.split.n2;
  for (std::size_t t = 0; t < data.size(); ++t) {
    const char* period = t < b1 ? "T1" : t < b2 ? "T2" : "T3";
    csv::write_row(out, {std::to_string(t + 1), csv::format_double(data.x[t]), csv::format_double(data.y[t]), period});
  }
}

void write_csv(const ToyDataset& data, const std::filesystem::path& path) {
  auto out = csv::open_output(path);
  write_csv(data, out);
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ToyDataset read_csv(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const std::size_t cx = table.column("x"), cy = table.column("y"), cp = table.column("period");
  ToyDataset d;
  int last = 1;
  std::size_t counts[3] = {0, 0, 0};
  for (const auto& row : table.rows) {
    const std::string& p = row[cp];
    const int period = p == "T1" ? 1 : p == "T2" ? 2 : p == "T3" ? 3 : 0;
    if (period == 0) throw IoError(path.string() + ": unknown period '" + p + "'");
    if (period < last) throw IoError(path.string() + ": periods are not contiguous");
    last = period;
    ++counts[period - 1];
    d.x.push_back(csv::parse_double(row[cx]));
    d.y.push_back(csv::parse_double(row[cy]));
  }
  d.split = {counts[0], counts[1], counts[2]};
  return d;
}

}  // namespace qavg::simulate
