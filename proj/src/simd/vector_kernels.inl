// Generic vectorized kernels over a lane-traits type V:
//   V::Real, V::Reg, V::kWidth
//   load(const Real*), store(Real*, Reg), set1(Real), zero()
//   add(Reg, Reg), mul(Reg, Reg), fma(a, b, c) = a * b + c, hsum(Reg)
// Included by the per-ISA translation units, which compile it with the
// matching target flags.

#include <cstddef>

#include "abov/simd/kernels.hpp"

namespace abov::simd::detail {

template <typename V>
struct VectorKernels {
  using Real = typename V::Real;
  using Reg = typename V::Reg;
  static constexpr std::size_t W = V::kWidth;

  static Real dot(const Real* x, const Real* y, std::size_t n) {
    Reg acc0 = V::zero();
    Reg acc1 = V::zero();
    std::size_t i = 0;
    for (; i + 2 * W <= n; i += 2 * W) {
      acc0 = V::fma(V::load(x + i), V::load(y + i), acc0);
      acc1 = V::fma(V::load(x + i + W), V::load(y + i + W), acc1);
    }
    for (; i + W <= n; i += W) acc0 = V::fma(V::load(x + i), V::load(y + i), acc0);
    Real acc = V::hsum(V::add(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
  }

  static void axpy(Real a, const Real* x, Real* y, std::size_t n) {
    const Reg av = V::set1(a);
    std::size_t i = 0;
    for (; i + W <= n; i += W) V::store(y + i, V::fma(av, V::load(x + i), V::load(y + i)));
    for (; i < n; ++i) y[i] += a * x[i];
  }

  static void add(const Real* x, const Real* y, Real* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W) V::store(out + i, V::add(V::load(x + i), V::load(y + i)));
    for (; i < n; ++i) out[i] = x[i] + y[i];
  }

  static void mul(const Real* x, const Real* y, Real* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + W <= n; i += W) V::store(out + i, V::mul(V::load(x + i), V::load(y + i)));
    for (; i < n; ++i) out[i] = x[i] * y[i];
  }

  // 4 x (2W) register-blocked micro-kernel; tails fall back to axpy rows.
  static void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
                      Real* c) {
    constexpr std::size_t kRows = 4;
    const std::size_t n_block = n - n % (2 * W);
    std::size_t i = 0;
    for (; i + kRows <= m; i += kRows) {
      for (std::size_t j = 0; j < n_block; j += 2 * W) {
        Reg acc[kRows][2];
        for (std::size_t r = 0; r < kRows; ++r) {
          acc[r][0] = V::load(c + (i + r) * n + j);
          acc[r][1] = V::load(c + (i + r) * n + j + W);
        }
        for (std::size_t p = 0; p < k; ++p) {
          const Reg b0 = V::load(b + p * n + j);
          const Reg b1 = V::load(b + p * n + j + W);
          for (std::size_t r = 0; r < kRows; ++r) {
            const Reg av = V::set1(a[(i + r) * k + p]);
            acc[r][0] = V::fma(av, b0, acc[r][0]);
            acc[r][1] = V::fma(av, b1, acc[r][1]);
          }
        }
        for (std::size_t r = 0; r < kRows; ++r) {
          V::store(c + (i + r) * n + j, acc[r][0]);
          V::store(c + (i + r) * n + j + W, acc[r][1]);
        }
      }
      if (n_block < n) {
        for (std::size_t r = 0; r < kRows; ++r) {
          for (std::size_t p = 0; p < k; ++p) {
            axpy(a[(i + r) * k + p], b + p * n + n_block, c + (i + r) * n + n_block, n - n_block);
          }
        }
      }
    }
    for (; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) axpy(a[i * k + p], b + p * n, c + i * n, n);
    }
  }

  static void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
                      Real* c) {
    if (k < W) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          Real acc = 0;
          for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
          c[i * n + j] += acc;
        }
      }
      return;
    }
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(a + i * k, b + j * k, k);
    }
  }

  static void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b,
                      Real* c) {
    for (std::size_t p = 0; p < k; ++p) {
      for (std::size_t i = 0; i < m; ++i) axpy(a[p * m + i], b + p * n, c + i * n, n);
    }
  }

  static constexpr KernelTable<Real> make(Isa isa) {
    return KernelTable<Real>{isa, &dot, &axpy, &add, &mul, &gemm_nn, &gemm_nt, &gemm_tn};
  }
};

}  // namespace abov::simd::detail
