// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <initializer_list>
#include <vector>

#include "acnet/errors.hpp"

namespace acnet {

/// Dense row-major matrix of 64-bit floats. The whole pipeline runs in
/// double precision so gradient checks at 1e-4 are meaningful.
class Matrix {
 public:
  Matrix() = default;

  Matrix(int rows, int cols) : rows_(rows), cols_(cols) {
    check_shape(rows, cols);
    data_.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  }

  Matrix(int rows, int cols, double fill_value) : Matrix(rows, cols) {
    fill(fill_value);
  }

  Matrix(int rows, int cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    check_shape(rows, cols);
    if (data_.size() != static_cast<std::size_t>(rows) * cols) {
      throw DimensionError("matrix data length does not match rows*cols");
    }
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row_ptr(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row_ptr(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  /// this += s * other
  void add_scaled(const Matrix& other, double s) {
    if (!same_shape(other)) throw DimensionError("add_scaled: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  static void check_shape(int rows, int cols) {
    if (rows < 0 || cols < 0) throw DimensionError("negative matrix dimension");
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// C = A * B
Matrix matmul_values(const Matrix& a, const Matrix& b);
/// C = A * B^T
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// C = A^T * B
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// Transposed copy.
Matrix transposed(const Matrix& m);

/// Largest |a-b| over all entries; shapes must match.
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace acnet
