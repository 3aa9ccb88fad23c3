#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace qavg::csv {

/// Shortest-round-trip is not enough for byte-stable output across
/// platforms, so every real is written with 17 significant digits.
std::string format_double(double v);

/// Shortest text that parses back to v; used for labels such as levels and
/// probabilities where 0.975 reads better than 0.97499999999999998.
std::string format_short(double v);

double parse_double(std::string_view field);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws IoError when absent.
  std::size_t column(std::string_view name) const;
};

/// Reads a comma-separated file with a header row. No quoting support:
/// every file this library writes is plain numeric or identifier text.
Table read(const std::filesystem::path& path);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Opens path for writing, creating parent directories; throws IoError.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace qavg::csv
