#pragma once

// Differentiable tensor operations. Every op validates shapes (ShapeError),
// rejects non-finite results (NumericsError), and records itself on the tape
// when grad mode is on and an input requires grad.

#include <cstddef>
#include <span>
#include <vector>

#include "abov/tensor.hpp"

namespace abov::ops {

template <typename Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b);
template <typename Real>
Tensor<Real> scale(const Tensor<Real>& a, Real factor);
template <typename Real>
Tensor<Real> add_scalar(const Tensor<Real>& a, Real value);

// a: [batch..., M, K]; b: [K, N] shared across the batch, or [batch..., K, N].
// With transpose_b, b is stored as [N, K] (or [batch..., N, K]).
template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b, bool transpose_b = false);

template <typename Real>
Tensor<Real> softmax_lastdim(const Tensor<Real>& x);

// Normalizes over the last axis, then applies gamma * xhat + beta.
// gamma and beta have shape [D]; pass undefined tensors to skip the affine.
template <typename Real>
Tensor<Real> layer_norm_affine(const Tensor<Real>& x, const Tensor<Real>& gamma, const Tensor<Real>& beta,
                               double eps = 1e-6);

template <typename Real>
Tensor<Real> gelu(const Tensor<Real>& x);

template <typename Real>
Tensor<Real> mean_over_axes(const Tensor<Real>& x, std::vector<std::size_t> axes, bool keepdim = false);
template <typename Real>
Tensor<Real> sum_all(const Tensor<Real>& x);
template <typename Real>
Tensor<Real> mean_all(const Tensor<Real>& x);

template <typename Real>
Tensor<Real> concat_axis(std::span<const Tensor<Real>> xs, std::size_t axis);
template <typename Real>
Tensor<Real> slice_axis(const Tensor<Real>& x, std::size_t axis, std::size_t begin, std::size_t end);

// Numpy-style: trailing axes aligned, extents equal or 1.
template <typename Real>
Tensor<Real> broadcast_to(const Tensor<Real>& x, const Shape& shape);

template <typename Real>
Tensor<Real> reshape(const Tensor<Real>& x, Shape shape);
template <typename Real>
Tensor<Real> permute(const Tensor<Real>& x, const std::vector<std::size_t>& perm);

// Sinusoidal features of real-valued levels: row i = [cos(t_i f_k)..., sin(t_i f_k)...]
// with f_k = 10000^(-k / (dim/2)). Constant w.r.t. the levels.
template <typename Real>
Tensor<Real> sinusoidal_embed(std::span<const double> levels, std::size_t dim);

}  // namespace abov::ops
