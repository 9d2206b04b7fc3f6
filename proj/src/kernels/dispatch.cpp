#include <atomic>
#include <cstdlib>
#include <string>

#include "smartcharge/error.hpp"
#include "smartcharge/kernels.hpp"

namespace smartcharge::kernels {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(SMARTCHARGE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{nullptr};
  return table;
}

} // namespace

bool supported(Isa isa) noexcept {
  switch (isa) {
  case Isa::scalar:
    return true;
  case Isa::avx2:
    return cpu_has_avx2();
  }
  return false;
}

std::string_view name(Isa isa) noexcept { return isa == Isa::avx2 ? "avx2" : "scalar"; }

const KernelTable& table(Isa isa) {
  if (!supported(isa)) throw InvalidParameter("kernels: instruction set '" + std::string(name(isa)) + "' unavailable");
#if defined(SMARTCHARGE_HAVE_AVX2)
  if (isa == Isa::avx2) return detail::avx2_table;
#endif
  return detail::scalar_table;
}

Isa detect() {
  if (const char* env = std::getenv("SMARTCHARGE_SIMD")) {
    const std::string_view want(env);
    if (want == "scalar") return Isa::scalar;
    if (want == "avx2" && supported(Isa::avx2)) return Isa::avx2;
  }
  return supported(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

const KernelTable& active() {
  const KernelTable* t = current().load(std::memory_order_acquire);
  if (!t) {
    t = &table(detect());
    current().store(t, std::memory_order_release);
  }
  return *t;
}

void select(Isa isa) { current().store(&table(isa), std::memory_order_release); }

} // namespace smartcharge::kernels
