#include <atomic>
#include <cstdlib>
#include <cstring>

#include "mpal/kernels.hpp"

namespace mpal::kernels {

#ifdef MPAL_BUILD_AVX2
const KernelTable& avx2_table_impl();
#endif

bool cpu_has_avx2() {
#if defined(MPAL_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* avx2_table() {
#ifdef MPAL_BUILD_AVX2
  static const KernelTable* table = cpu_has_avx2() ? &avx2_table_impl() : nullptr;
  return table;
#else
  return nullptr;
#endif
}

namespace {

Isa initial_isa() {
  const char* env = std::getenv("MPAL_SIMD");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return Isa::scalar;
  return avx2_table() != nullptr ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

Isa active_isa() { return current().load(std::memory_order_relaxed); }

const KernelTable& active() {
  if (active_isa() == Isa::avx2) {
    if (const KernelTable* t = avx2_table()) return *t;
  }
  return scalar_table();
}

bool select(Isa isa) {
  if (isa == Isa::avx2 && avx2_table() == nullptr) return false;
  current().store(isa, std::memory_order_relaxed);
  return true;
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

}  // namespace mpal::kernels
