// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>

// Dense double-precision inner loops used by every layer. Each backend
// provides the same table; the scalar one is the reference the others are
// tested against.
namespace gcnm::kernels {

enum class Backend { scalar, avx2 };

struct Table {
  // c[m x n] += a[m x k] * b[k x n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  // c[m x n] += a[k x m]^T * b[k x n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  // c[m x n] += a[m x k] * b[n x k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  double (*dot)(std::size_t n, const double* a, const double* b);
  // y += alpha * x
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);
  // y[i] += x[i] * z[i]
  void (*fma_mul)(std::size_t n, const double* x, const double* z, double* y);
};

const Table& table(Backend backend);
const Table& active();
Backend active_backend();

bool available(Backend backend);
// Throws std::invalid_argument if the backend is not available on this CPU.
void select(Backend backend);

std::string_view name(Backend backend);

namespace scalar {
extern const Table kTable;
}
#if defined(GCNM_HAVE_AVX2)
namespace avx2 {
extern const Table kTable;
}
#endif

}  // namespace gcnm::kernels
