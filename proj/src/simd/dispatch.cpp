#include <atomic>
#include <cstdlib>
#include <cstring>

#include "abov/simd/kernels.hpp"

namespace abov::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("BOV_SIMD"); env != nullptr && std::strcmp(env, "scalar") == 0) {
    return Isa::Scalar;
  }
  return detect_isa();
}

std::atomic<Isa>& active_slot() noexcept {
  static std::atomic<Isa> slot{initial_isa()};
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
      return avx2::table<float>() != nullptr && cpu_has_avx2();
    case Isa::Neon:
      return neon::table<float>() != nullptr;
  }
  return false;
}

Isa detect_isa() noexcept {
  if (isa_available(Isa::Avx2)) return Isa::Avx2;
  if (isa_available(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

template <typename Real>
const KernelTable<Real>& table_for(Isa isa) noexcept {
  if (isa_available(isa)) {
    if (isa == Isa::Avx2) return *avx2::table<Real>();
    if (isa == Isa::Neon) return *neon::table<Real>();
  }
  return scalar::table<Real>();
}

template <typename Real>
const KernelTable<Real>& active() noexcept {
  return table_for<Real>(active_slot().load(std::memory_order_relaxed));
}

Isa active_isa() noexcept { return active_slot().load(std::memory_order_relaxed); }

Isa set_active_isa(Isa isa) noexcept {
  if (!isa_available(isa)) isa = Isa::Scalar;
  return active_slot().exchange(isa);
}

template const KernelTable<float>& table_for<float>(Isa) noexcept;
template const KernelTable<double>& table_for<double>(Isa) noexcept;
template const KernelTable<float>& active<float>() noexcept;
template const KernelTable<double>& active<double>() noexcept;

}  // namespace abov::simd
