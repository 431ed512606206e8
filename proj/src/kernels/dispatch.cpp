#include <atomic>
#include <cstdlib>
#include <string_view>

#include "feats/errors.hpp"
#include "feats/kernels.hpp"

namespace feats::kernels {

namespace detail {
const KernelTable* avx2_table();
}

namespace {

bool cpu_has_avx2_fma() {
#if (defined(__x86_64__) || defined(_M_X64)) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() {
  const KernelTable* fast = avx2();
  if (const char* env = std::getenv("FEATS_KERNELS")) {
    std::string_view want(env);
    if (want == "scalar") return &scalar();
    if (want == "avx2" && fast) return fast;
  }
  return fast ? fast : &scalar();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable* avx2() {
  static const bool supported = cpu_has_avx2_fma();
  return supported ? detail::avx2_table() : nullptr;
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

void select(Isa isa) {
  if (isa == Isa::Scalar) {
    current().store(&scalar());
    return;
  }
  const KernelTable* fast = avx2();
  if (!fast) throw ConfigError("AVX2 kernels requested but unavailable on this CPU or build");
  current().store(fast);
}

}  // namespace feats::kernels
