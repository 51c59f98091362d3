#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "inbo/errors.hpp"

namespace inbo {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  // 1-based source line per row

  int column(const std::string& name) const;  // throws ParseError if absent
};

CsvTable read_csv(const std::filesystem::path& file);

double parse_double(const std::string& field, int line, const std::string& column);
long parse_long(const std::string& field, int line, const std::string& column);

// Shortest round-trip representation; keeps report files byte-stable.
std::string format_double(double v);

}  // namespace inbo
