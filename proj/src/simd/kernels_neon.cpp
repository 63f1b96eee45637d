#include "abov/simd/kernels.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#define ABOV_HAVE_NEON 1
#include <arm_neon.h>

#include "vector_kernels.inl"
#endif

namespace abov::simd::neon {

#if ABOV_HAVE_NEON
namespace {

struct F32x4 {
  using Real = float;
  using Reg = float32x4_t;
  static constexpr std::size_t kWidth = 4;
  static Reg load(const float* p) { return vld1q_f32(p); }
  static void store(float* p, Reg v) { vst1q_f32(p, v); }
  static Reg set1(float v) { return vdupq_n_f32(v); }
  static Reg zero() { return vdupq_n_f32(0.0f); }
  static Reg add(Reg a, Reg b) { return vaddq_f32(a, b); }
  static Reg mul(Reg a, Reg b) { return vmulq_f32(a, b); }
  static Reg fma(Reg a, Reg b, Reg c) { return vfmaq_f32(c, a, b); }
  static float hsum(Reg v) { return vaddvq_f32(v); }
};

struct F64x2 {
  using Real = double;
  using Reg = float64x2_t;
  static constexpr std::size_t kWidth = 2;
  static Reg load(const double* p) { return vld1q_f64(p); }
  static void store(double* p, Reg v) { vst1q_f64(p, v); }
  static Reg set1(double v) { return vdupq_n_f64(v); }
  static Reg zero() { return vdupq_n_f64(0.0); }
  static Reg add(Reg a, Reg b) { return vaddq_f64(a, b); }
  static Reg mul(Reg a, Reg b) { return vmulq_f64(a, b); }
  static Reg fma(Reg a, Reg b, Reg c) { return vfmaq_f64(c, a, b); }
  static double hsum(Reg v) { return vaddvq_f64(v); }
};

constexpr auto kF32 = detail::VectorKernels<F32x4>::make(Isa::Neon);
constexpr auto kF64 = detail::VectorKernels<F64x2>::make(Isa::Neon);

}  // namespace

template <>
const KernelTable<float>* table<float>() noexcept {
  return &kF32;
}
template <>
const KernelTable<double>* table<double>() noexcept {
  return &kF64;
}
#else
template <>
const KernelTable<float>* table<float>() noexcept {
  return nullptr;
}
template <>
const KernelTable<double>* table<double>() noexcept {
  return nullptr;
}
#endif

}  // namespace abov::simd::neon
