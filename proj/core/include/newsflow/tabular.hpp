#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace newsflow {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);
/// Throws DataError on anything but a complete numeric literal.
double parse_double(std::string_view text);
long long parse_integer(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char delimiter);
std::string_view trim(std::string_view text);
std::string to_lower_ascii(std::string_view text);

/// Simple comma-separated rows without quoting; fields must not contain commas.
class CsvTable {
 public:
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Throws DataError if `name` is not in the header.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

/// Opens for writing, creating parent directories. Throws Error when the
/// destination cannot be written.
std::ofstream open_output(const std::filesystem::path& path,
                          std::ios::openmode mode = std::ios::out);
std::ifstream open_input(const std::filesystem::path& path,
                         std::ios::openmode mode = std::ios::in);

}  // namespace newsflow
