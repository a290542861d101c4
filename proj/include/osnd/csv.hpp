#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace osnd {

// Minimal comma-separated table: leading "# ..." lines are kept as comments,
// the first non-comment line is the header. Fields are not quoted, so
// writers must not emit commas or newlines inside a field.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column position by name; throws FormatError when absent.
  std::size_t column(std::string_view name) const;
};

std::vector<std::string> split_fields(std::string_view line, char sep = ',');

CsvTable read_csv(const std::filesystem::path& file);

// Shortest decimal text that round-trips the double exactly.
std::string format_double(double value);

}  // namespace osnd
