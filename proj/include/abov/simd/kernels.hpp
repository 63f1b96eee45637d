#pragma once

// Data-parallel inner loops used by the tensor core.
//
// Every kernel has a scalar reference implementation; vectorized variants
// (AVX2+FMA on x86-64, NEON on AArch64) are selected once at runtime. All
// gemm kernels accumulate into C (C += ...) and take dense row-major operands.

#include <cstddef>
#include <string_view>

namespace abov::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa) noexcept;

template <typename Real>
struct KernelTable {
  Isa isa;
  // sum_i x[i] * y[i]
  Real (*dot)(const Real* x, const Real* y, std::size_t n);
  // y += a * x
  void (*axpy)(Real a, const Real* x, Real* y, std::size_t n);
  // out = x + y
  void (*add)(const Real* x, const Real* y, Real* out, std::size_t n);
  // out = x * y
  void (*mul)(const Real* x, const Real* y, Real* out, std::size_t n);
  // C[M,N] += A[M,K] * B[K,N]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c);
  // C[M,N] += A[M,K] * B[N,K]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c);
  // C[M,N] += A[K,M]^T * B[K,N]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c);
};

// Best ISA supported by this build and CPU.
Isa detect_isa() noexcept;

// Whether `isa` can run here.
bool isa_available(Isa isa) noexcept;

// Table for a specific ISA; falls back to scalar when unavailable.
template <typename Real>
const KernelTable<Real>& table_for(Isa isa) noexcept;

// The table used by tensor ops. Defaults to detect_isa(); the environment
// variable BOV_SIMD=scalar forces the reference kernels.
template <typename Real>
const KernelTable<Real>& active() noexcept;

Isa active_isa() noexcept;

// Override the active ISA (tests and benchmarks). Returns the previous one.
Isa set_active_isa(Isa isa) noexcept;

namespace scalar {
template <typename Real>
const KernelTable<Real>& table() noexcept;
}
namespace avx2 {
template <typename Real>
const KernelTable<Real>* table() noexcept;  // nullptr when not compiled in
}
namespace neon {
template <typename Real>
const KernelTable<Real>* table() noexcept;
}

}  // namespace abov::simd
