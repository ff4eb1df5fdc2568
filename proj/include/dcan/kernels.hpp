#pragma once

// Inner-loop arithmetic shared by every layer. Each primitive has a scalar
// reference implementation and, on x86-64, an AVX2+FMA variant for float
// that is selected at runtime. Double precision always takes the scalar path.

#include <cstddef>
#include <span>
#include <string_view>

namespace dcan::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

// True when the CPU (and the build) can run `isa`.
bool isa_available(Isa isa) noexcept;

// ISA used by the dispatching entry points below. Defaults to the best
// available one; DCAN_SIMD=scalar in the environment forces the reference path.
Isa active_isa() noexcept;

// Overrides the dispatch target. Throws ConfigError if `isa` is unavailable.
void set_active_isa(Isa isa);

namespace scalar {

template <typename T>
T dot(const T* x, const T* y, std::size_t n) noexcept {
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
double sum_sq_diff(const T* x, const T* y, std::size_t n) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    acc += d * d;
  }
  return acc;
}

template <typename T>
T sum(const T* x, std::size_t n) noexcept {
  T acc = T(0);
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

// C[m x n] += A[m x k] * B[k x n], all row-major with leading dimensions
// lda, ldb, ldc.
template <typename T>
void gemm(std::size_t m, std::size_t n, std::size_t k, const T* a, std::size_t lda, const T* b, std::size_t ldb,
          T* c, std::size_t ldc) noexcept {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * ldc;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = a[i * lda + p];
      const T* brow = b + p * ldb;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define DCAN_HAVE_AVX2_KERNELS 1
namespace avx2 {
float dot(const float* x, const float* y, std::size_t n) noexcept;
void axpy(float alpha, const float* x, float* y, std::size_t n) noexcept;
double sum_sq_diff(const float* x, const float* y, std::size_t n) noexcept;
float sum(const float* x, std::size_t n) noexcept;
void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b,
          std::size_t ldb, float* c, std::size_t ldc) noexcept;
}  // namespace avx2
#else
#define DCAN_HAVE_AVX2_KERNELS 0
#endif

// Dispatching entry points.
float dot(const float* x, const float* y, std::size_t n) noexcept;
void axpy(float alpha, const float* x, float* y, std::size_t n) noexcept;
double sum_sq_diff(const float* x, const float* y, std::size_t n) noexcept;
float sum(const float* x, std::size_t n) noexcept;
void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b,
          std::size_t ldb, float* c, std::size_t ldc) noexcept;

inline double dot(const double* x, const double* y, std::size_t n) noexcept {
  return scalar::dot(x, y, n);
}
inline void axpy(double alpha, const double* x, double* y, std::size_t n) noexcept {
  scalar::axpy(alpha, x, y, n);
}
inline double sum_sq_diff(const double* x, const double* y, std::size_t n) noexcept {
  return scalar::sum_sq_diff(x, y, n);
}
inline double sum(const double* x, std::size_t n) noexcept { return scalar::sum(x, n); }
inline void gemm(std::size_t m, std::size_t n, std::size_t k, const double* a, std::size_t lda, const double* b,
                 std::size_t ldb, double* c, std::size_t ldc) noexcept {
  scalar::gemm(m, n, k, a, lda, b, ldb, c, ldc);
}

template <typename T>
double sum_sq_diff(std::span<const T> x, std::span<const T> y) noexcept {
  return sum_sq_diff(x.data(), y.data(), x.size());
}

}  // namespace dcan::kernels
