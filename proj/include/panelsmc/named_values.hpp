#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "panelsmc/errors.hpp"

namespace panelsmc {

// Ordered map from identifier to real value. Order is part of the contract
// (parameter vectors print and serialize in a fixed order), so this is a
// pair of parallel vectors rather than a hash map; lookups are linear scans,
// which is fine at the sizes seen here.
class NamedValues {
 public:
  NamedValues() = default;
  NamedValues(std::vector<std::string> names, std::vector<double> values);
  NamedValues(std::initializer_list<std::pair<std::string, double>> entries);

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }

  bool contains(const std::string& name) const;
  // Index of `name`; throws NameError when absent.
  std::size_t index_of(const std::string& name) const;

  double get(const std::string& name) const { return values_[index_of(name)]; }
  void set(const std::string& name, double value) { values_[index_of(name)] = value; }

  // Appends a new entry; throws NameClash on duplicates.
  void push_back(std::string name, double value);

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  const std::string& name_at(std::size_t i) const { return names_[i]; }
  double value_at(std::size_t i) const { return values_[i]; }
  double& value_at(std::size_t i) { return values_[i]; }

  bool operator==(const NamedValues&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
};

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Builds a matrix from equal-length rows; ragged input -> ShapeError.
Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows);

}  // namespace panelsmc
