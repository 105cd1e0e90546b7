// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gcnm {

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void fill(double v);
  void set_zero() { fill(0.0); }
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using Sequence = std::vector<Matrix>;

// All products dispatch to the active SIMD backend.
Matrix matmul(const Matrix& a, const Matrix& b);
// c += a * b
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c);
// c += a^T * b
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);
// c += a * b^T
void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c);

// y += alpha * x
void axpy(double alpha, const Matrix& x, Matrix& y);
double dot(std::span<const double> a, std::span<const double> b);
void add_row_broadcast(std::span<const double> bias, Matrix& m);
// bias_grad += column sums of g
void accumulate_column_sums(const Matrix& g, Matrix& bias_grad);

Matrix transpose(const Matrix& m);
bool all_finite(const Matrix& m);
double max_abs(const Matrix& m);

}  // namespace gcnm
