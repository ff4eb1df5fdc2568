#include "dcan/kernels.hpp"

#if DCAN_HAVE_AVX2_KERNELS

#include <immintrin.h>

#include <algorithm>

namespace dcan::kernels::avx2 {

namespace {

inline float hsum(__m256 v) noexcept {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 0x55));
  return _mm_cvtss_f32(lo);
}

inline double hsum(__m256d v) noexcept {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

}  // namespace

float dot(const float* x, const float* y, std::size_t n) noexcept {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), acc1);
  }
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), acc0);
  }
  float acc = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy(float alpha, const float* x, float* y, std::size_t n) noexcept {
  const __m256 a = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(a, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_diff(const float* x, const float* y, std::size_t n) noexcept {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d x0 = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    const __m256d x1 = _mm256_cvtps_pd(_mm_loadu_ps(x + i + 4));
    const __m256d d0 = _mm256_sub_pd(x0, _mm256_cvtps_pd(_mm_loadu_ps(y + i)));
    const __m256d d1 = _mm256_sub_pd(x1, _mm256_cvtps_pd(_mm_loadu_ps(y + i + 4)));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    acc += d * d;
  }
  return acc;
}

float sum(const float* x, std::size_t n) noexcept {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float total = hsum(acc);
  for (; i < n; ++i) total += x[i];
  return total;
}

namespace {

// Lane mask selecting the first `valid` of 8 floats.
inline __m256i lane_mask(std::size_t valid) noexcept {
  alignas(32) static const int kTable[16] = {-1, -1, -1, -1, -1, -1, -1, -1, 0, 0, 0, 0, 0, 0, 0, 0};
  return _mm256_loadu_si256(reinterpret_cast<const __m256i*>(kTable + 8 - valid));
}

// MR rows of C by 16 columns (the first `cols` of them), k-loop of rank-1
// updates with A broadcast.
template <int MR>
void block(std::size_t k, const float* a, std::size_t lda, const float* b, std::size_t ldb, float* c,
           std::size_t ldc, std::size_t cols) noexcept {
  const __m256i m0 = lane_mask(cols >= 8 ? 8 : cols);
  const __m256i m1 = lane_mask(cols > 8 ? cols - 8 : 0);
  __m256 acc[MR][2];
  for (int r = 0; r < MR; ++r) {
    acc[r][0] = _mm256_maskload_ps(c + r * ldc, m0);
    acc[r][1] = _mm256_maskload_ps(c + r * ldc + 8, m1);
  }
  if (cols == 16) {
    for (std::size_t p = 0; p < k; ++p) {
      const __m256 b0 = _mm256_loadu_ps(b + p * ldb);
      const __m256 b1 = _mm256_loadu_ps(b + p * ldb + 8);
      for (int r = 0; r < MR; ++r) {
        const __m256 av = _mm256_broadcast_ss(a + r * lda + p);
        acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
        acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
      }
    }
  } else {
    for (std::size_t p = 0; p < k; ++p) {
      const __m256 b0 = _mm256_maskload_ps(b + p * ldb, m0);
      const __m256 b1 = _mm256_maskload_ps(b + p * ldb + 8, m1);
      for (int r = 0; r < MR; ++r) {
        const __m256 av = _mm256_broadcast_ss(a + r * lda + p);
        acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
        acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
      }
    }
  }
  for (int r = 0; r < MR; ++r) {
    _mm256_maskstore_ps(c + r * ldc, m0, acc[r][0]);
    _mm256_maskstore_ps(c + r * ldc + 8, m1, acc[r][1]);
  }
}

}  // namespace

void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b,
          std::size_t ldb, float* c, std::size_t ldc) noexcept {
  // Panels of B stay cache resident while every row block of A passes over them.
  constexpr std::size_t kKc = 256;
  for (std::size_t p0 = 0; p0 < k; p0 += kKc) {
    const std::size_t kc = std::min(kKc, k - p0);
    for (std::size_t j = 0; j < n; j += 16) {
      const std::size_t cols = std::min<std::size_t>(16, n - j);
      const float* bp = b + p0 * ldb + j;
      std::size_t i = 0;
      for (; i + 4 <= m; i += 4) block<4>(kc, a + i * lda + p0, lda, bp, ldb, c + i * ldc + j, ldc, cols);
      switch (m - i) {
        case 3: block<3>(kc, a + i * lda + p0, lda, bp, ldb, c + i * ldc + j, ldc, cols); break;
        case 2: block<2>(kc, a + i * lda + p0, lda, bp, ldb, c + i * ldc + j, ldc, cols); break;
        case 1: block<1>(kc, a + i * lda + p0, lda, bp, ldb, c + i * ldc + j, ldc, cols); break;
        default: break;
      }
    }
  }
}

}  // namespace dcan::kernels::avx2

#endif
