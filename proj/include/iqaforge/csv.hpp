#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace iqaforge {

// Comma-separated table with a header row. Fields never contain commas,
// quotes or newlines (image ids, metric ids and numbers only), so no quoting
// is performed; writing a field that would need it is an error.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; FormatError if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text, std::string_view origin);
std::string format_csv(const CsvTable& table);

// Writes to a sibling temp file, then renames over the destination.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_file_atomic(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);

std::string read_text_file(const std::filesystem::path& path);

// Shortest representation that parses back to the same double.
std::string format_double(double value);
double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

}  // namespace iqaforge
