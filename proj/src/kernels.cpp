#include "dcan/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#include "dcan/error.hpp"

namespace dcan::kernels {

namespace {

struct Table {
  float (*dot)(const float*, const float*, std::size_t) noexcept;
  void (*axpy)(float, const float*, float*, std::size_t) noexcept;
  double (*sum_sq_diff)(const float*, const float*, std::size_t) noexcept;
  float (*sum)(const float*, std::size_t) noexcept;
  void (*gemm)(std::size_t, std::size_t, std::size_t, const float*, std::size_t, const float*, std::size_t, float*,
               std::size_t) noexcept;
};

constexpr Table kScalarTable{&scalar::dot<float>, &scalar::axpy<float>, &scalar::sum_sq_diff<float>,
                             &scalar::sum<float>, &scalar::gemm<float>};
#if DCAN_HAVE_AVX2_KERNELS
constexpr Table kAvx2Table{&avx2::dot, &avx2::axpy, &avx2::sum_sq_diff, &avx2::sum, &avx2::gemm};
#endif

bool cpu_has_avx2() noexcept {
#if DCAN_HAVE_AVX2_KERNELS && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Table* table_for(Isa isa) noexcept {
#if DCAN_HAVE_AVX2_KERNELS
  if (isa == Isa::avx2) return &kAvx2Table;
#endif
  (void)isa;
  return &kScalarTable;
}

Isa default_isa() noexcept {
  if (const char* env = std::getenv("DCAN_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return Isa::scalar;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

struct Dispatch {
  std::atomic<Isa> isa{default_isa()};
  std::atomic<const Table*> table{table_for(isa.load())};
};

Dispatch& dispatch() noexcept {
  static Dispatch d;
  return d;
}

const Table& active() noexcept { return *dispatch().table.load(std::memory_order_relaxed); }

}  // namespace

std::string_view isa_name(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

bool isa_available(Isa isa) noexcept {
  static const bool avx2 = cpu_has_avx2();
  return isa == Isa::scalar || avx2;
}

Isa active_isa() noexcept { return dispatch().isa.load(); }

void set_active_isa(Isa isa) {
  if (!isa_available(isa)) {
    throw ConfigError("instruction set '" + std::string(isa_name(isa)) + "' is not available on this CPU");
  }
  dispatch().isa.store(isa);
  dispatch().table.store(table_for(isa));
}

float dot(const float* x, const float* y, std::size_t n) noexcept { return active().dot(x, y, n); }
void axpy(float alpha, const float* x, float* y, std::size_t n) noexcept { active().axpy(alpha, x, y, n); }
double sum_sq_diff(const float* x, const float* y, std::size_t n) noexcept {
  return active().sum_sq_diff(x, y, n);
}
float sum(const float* x, std::size_t n) noexcept { return active().sum(x, n); }
void gemm(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t lda, const float* b,
          std::size_t ldb, float* c, std::size_t ldc) noexcept {
  active().gemm(m, n, k, a, lda, b, ldb, c, ldc);
}

}  // namespace dcan::kernels
