#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace pidrl {

/// Formats a double with 9 significant digits ("%.9g").
std::string format_number(double value);

/// Minimal CSV sink: header on construction, one row per call.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string_view> columns);

  CsvWriter& row(std::initializer_list<double> values);
  CsvWriter& row(const std::vector<std::string>& cells);

  std::size_t columns() const { return columns_; }

 private:
  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace pidrl
