#include "abov/simd/kernels.hpp"

namespace abov::simd::scalar {
namespace {

template <typename Real>
Real dot(const Real* x, const Real* y, std::size_t n) {
  Real acc = 0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

template <typename Real>
void axpy(Real a, const Real* x, Real* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename Real>
void add(const Real* x, const Real* y, Real* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
}

template <typename Real>
void mul(const Real* x, const Real* y, Real* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
}

template <typename Real>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = a[i * k + p];
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += av * b[p * n + j];
    }
  }
}

template <typename Real>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      Real acc = 0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * n + j] += acc;
    }
  }
}

template <typename Real>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const Real* a, const Real* b, Real* c) {
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t i = 0; i < m; ++i) {
      const Real av = a[p * m + i];
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] += av * b[p * n + j];
    }
  }
}

template <typename Real>
constexpr KernelTable<Real> kTable{
    Isa::Scalar,   &dot<Real>,     &axpy<Real>,    &add<Real>,
    &mul<Real>,    &gemm_nn<Real>, &gemm_nt<Real>, &gemm_tn<Real>,
};

}  // namespace

template <typename Real>
const KernelTable<Real>& table() noexcept {
  return kTable<Real>;
}

template const KernelTable<float>& table<float>() noexcept;
template const KernelTable<double>& table<double>() noexcept;

}  // namespace abov::simd::scalar
