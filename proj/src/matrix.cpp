// SPDX-License-Identifier: Apache-2.0
#include "gcnm/matrix.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "gcnm/kernels.hpp"

namespace gcnm {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}
}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  matmul_acc(a, b, c);
  return c;
}

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols(),
          "matmul_acc: shape mismatch");
  kernels::active().gemm_nn(a.rows(), b.cols(), a.cols(), a.data(), b.data(), c.data());
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols(),
          "matmul_tn_acc: shape mismatch");
  kernels::active().gemm_tn(a.cols(), b.cols(), a.rows(), a.data(), b.data(), c.data());
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.cols() == b.cols() && c.rows() == a.rows() && c.cols() == b.rows(),
          "matmul_nt_acc: shape mismatch");
  kernels::active().gemm_nt(a.rows(), b.rows(), a.cols(), a.data(), b.data(), c.data());
}

void axpy(double alpha, const Matrix& x, Matrix& y) {
  require(x.same_shape(y), "axpy: shape mismatch");
  kernels::active().axpy(x.size(), alpha, x.data(), y.data());
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "dot: length mismatch");
  return kernels::active().dot(a.size(), a.data(), b.data());
}

void add_row_broadcast(std::span<const double> bias, Matrix& m) {
  require(bias.size() == m.cols(), "add_row_broadcast: width mismatch");
  const auto& k = kernels::active();
  for (std::size_t r = 0; r < m.rows(); ++r) k.axpy(m.cols(), 1.0, bias.data(), m.row(r).data());
}

void accumulate_column_sums(const Matrix& g, Matrix& bias_grad) {
  require(bias_grad.size() == g.cols(), "accumulate_column_sums: width mismatch");
  const auto& k = kernels::active();
  for (std::size_t r = 0; r < g.rows(); ++r) k.axpy(g.cols(), 1.0, g.row(r).data(), bias_grad.data());
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.values().begin(), m.values().end(), [](double v) { return std::isfinite(v); });
}

double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double v : m.values()) best = std::max(best, std::abs(v));
  return best;
}

}  // namespace gcnm
