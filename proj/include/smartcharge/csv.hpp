#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace smartcharge::csv {

/// In-memory CSV table with a mandatory header row. Fields are not quoted.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws InputError when missing.
  std::size_t column(std::string_view name) const;
  /// Throws InputError unless the header matches `expected` exactly.
  void expect_header(const std::vector<std::string>& expected) const;
};

Table parse(std::istream& in);
Table read(const std::filesystem::path& path);
void write(const std::filesystem::path& path, const Table& table);
void write(std::ostream& out, const Table& table);

/// Shortest representation that parses back to the identical double.
std::string format(double value);
std::string format(long long value);
double parse_double(std::string_view field);
long long parse_int(std::string_view field);

} // namespace smartcharge::csv
