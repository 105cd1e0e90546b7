// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "gcnm/kernels.hpp"

namespace gcnm::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(GCNM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

// GCNM_KERNELS=scalar forces the reference path.
Backend initial_backend() {
  if (const char* env = std::getenv("GCNM_KERNELS"); env != nullptr) {
    const std::string want(env);
    if (want == "scalar") return Backend::scalar;
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

bool cpu_has_avx2_cached() {
  static const bool has = cpu_has_avx2();
  return has;
}

const Table& resolve(Backend backend) {
#if defined(GCNM_HAVE_AVX2)
  if (backend == Backend::avx2) return avx2::kTable;
#endif
  return scalar::kTable;
}

struct State {
  Backend backend;
  const Table* table;
};

State& current() {
  static State state = [] {
    Backend b = initial_backend();
    return State{b, &resolve(b)};
  }();
  return state;
}

}  // namespace

bool available(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
      return cpu_has_avx2_cached();
  }
  return false;
}

const Table& table(Backend backend) {
  if (!available(backend)) {
    throw std::invalid_argument("kernel backend '" + std::string(name(backend)) +
                                "' is not available on this CPU");
  }
  return resolve(backend);
}

const Table& active() { return *current().table; }

Backend active_backend() { return current().backend; }

void select(Backend backend) {
  if (!available(backend)) {
    throw std::invalid_argument("kernel backend '" + std::string(name(backend)) +
                                "' is not available on this CPU");
  }
  current() = State{backend, &resolve(backend)};
}

std::string_view name(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace gcnm::kernels
