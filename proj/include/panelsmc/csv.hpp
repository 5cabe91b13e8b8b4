#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace panelsmc {

// Comma-separated, '.' decimal point, header row mandatory, UTF-8, no
// quoting (the schemas here never need it). Doubles are written with 17
// significant digits so files round-trip bit for bit.
std::string format_double(double value);
double parse_double(const std::string& cell);  // FormatError on junk

class CsvTable {
 public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const { return columns_; }
  std::size_t n_rows() const { return cells_.size(); }

  // index of a column; FormatError when missing
  std::size_t column_index(const std::string& name) const;
  bool has_column(const std::string& name) const;

  void add_row(std::vector<std::string> cells);  // FormatError on width mismatch
  const std::string& cell(std::size_t row, std::size_t col) const { return cells_[row][col]; }
  const std::string& cell(std::size_t row, const std::string& col) const {
    return cells_[row][column_index(col)];
  }
  double number(std::size_t row, const std::string& col) const {
    return parse_double(cell(row, col));
  }

  void write(const std::filesystem::path& path) const;
  static CsvTable read(const std::filesystem::path& path);

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> cells_;
};

}  // namespace panelsmc
