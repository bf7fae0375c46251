#include <atomic>
#include <cstdlib>
#include <cstring>

#include "holoseis/simd/kernels.hpp"

namespace holoseis::simd {
namespace {

Isa detect() {
  const char* env = std::getenv("HOLOSEIS_SIMD");
  if (env && std::strcmp(env, "scalar") == 0) return Isa::scalar;
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<int>& current() {
  static std::atomic<int> isa{static_cast<int>(detect())};
  return isa;
}

}  // namespace

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() { return static_cast<Isa>(current().load(std::memory_order_relaxed)); }

void force_isa(Isa isa) {
  if (isa == Isa::avx2 && !cpu_has_avx2()) isa = Isa::scalar;
  current().store(static_cast<int>(isa), std::memory_order_relaxed);
}

const KernelTable& table() { return active_isa() == Isa::avx2 ? avx2_table() : scalar_table(); }

}  // namespace holoseis::simd
