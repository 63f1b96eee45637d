#include "abov/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "abov/errors.hpp"
#include "abov/simd/kernels.hpp"

namespace abov::ops {
namespace {

template <typename Real>
using NodeT = detail::Node<Real>;

template <typename Real>
void require_same_shape(const Tensor<Real>& a, const Tensor<Real>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

template <typename Real>
void accumulate(NodeT<Real>& parent, std::span<const Real> g) {
  if (!parent.requires_grad) return;
  auto& pg = parent.ensure_grad();
  simd::active<Real>().axpy(Real(1), g.data(), pg.data(), g.size());
}

Shape strides_of(const Shape& shape) {
  Shape s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  return s;
}

// Visits every index of `shape` in row-major order, passing the linear output
// offset and the offset into a source addressed through `src_strides`.
template <typename Fn>
void for_each_mapped(const Shape& full_shape, const Shape& full_strides, Fn&& fn) {
  // Unit axes are dropped and neighbours that stay contiguous in the source
  // are merged, so the inner loop runs as long as possible.
  Shape shape, src_strides;
  for (std::size_t ax = 0; ax < full_shape.size(); ++ax) {
    if (full_shape[ax] == 1) continue;
    if (!shape.empty() && src_strides.back() == full_strides[ax] * full_shape[ax]) {
      shape.back() *= full_shape[ax];
      src_strides.back() = full_strides[ax];
      continue;
    }
    shape.push_back(full_shape[ax]);
    src_strides.push_back(full_strides[ax]);
  }
  const std::size_t rank = shape.size();
  const std::size_t total = shape_numel(shape);
  if (rank == 0) {
    fn(std::size_t{0}, std::size_t{0});
    return;
  }
  std::vector<std::size_t> idx(rank, 0);
  std::size_t src = 0;
  const std::size_t inner = shape[rank - 1];
  const std::size_t inner_stride = src_strides[rank - 1];
  for (std::size_t out = 0; out < total; out += inner) {
    std::size_t s = src;
    for (std::size_t j = 0; j < inner; ++j, s += inner_stride) fn(out + j, s);
    for (std::size_t ax = rank - 1; ax-- > 0;) {
      ++idx[ax];
      src += src_strides[ax];
      if (idx[ax] < shape[ax]) break;
      src -= src_strides[ax] * shape[ax];
      idx[ax] = 0;
    }
  }
}

}  // namespace

template <typename Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a, b, "add");
  std::vector<Real> out(a.numel());
  simd::active<Real>().add(a.data().data(), b.data().data(), out.data(), out.size());
  return Tensor<Real>::make_result(a.shape(), std::move(out), {a, b}, [](NodeT<Real>& self) {
    accumulate<Real>(*self.parents[0], self.grad);
    accumulate<Real>(*self.parents[1], self.grad);
  });
}

template <typename Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a, b, "sub");
  std::vector<Real> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return Tensor<Real>::make_result(a.shape(), std::move(out), {a, b}, [](NodeT<Real>& self) {
    accumulate<Real>(*self.parents[0], self.grad);
    auto& pb = *self.parents[1];
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a, b, "mul");
  const auto& k = simd::active<Real>();
  std::vector<Real> out(a.numel());
  k.mul(a.data().data(), b.data().data(), out.data(), out.size());
  return Tensor<Real>::make_result(a.shape(), std::move(out), {a, b}, [](NodeT<Real>& self) {
    const auto& kk = simd::active<Real>();
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const std::size_t n = self.grad.size();
    std::vector<Real> tmp(n);
    if (pa.requires_grad) {
      kk.mul(self.grad.data(), pb.data.data(), tmp.data(), n);
      accumulate<Real>(pa, tmp);
    }
    if (pb.requires_grad) {
      kk.mul(self.grad.data(), pa.data.data(), tmp.data(), n);
      accumulate<Real>(pb, tmp);
    }
  });
}

template <typename Real>
Tensor<Real> scale(const Tensor<Real>& a, Real factor) {
  std::vector<Real> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= factor;
  return Tensor<Real>::make_result(a.shape(), std::move(out), {a}, [factor](NodeT<Real>& self) {
    auto& p = *self.parents[0];
    simd::active<Real>().axpy(factor, self.grad.data(), p.ensure_grad().data(), self.grad.size());
  });
}

template <typename Real>
Tensor<Real> add_scalar(const Tensor<Real>& a, Real value) {
  std::vector<Real> out(a.data().begin(), a.data().end());
  for (auto& v : out) v += value;
  return Tensor<Real>::make_result(a.shape(), std::move(out), {a}, [](NodeT<Real>& self) {
    accumulate<Real>(*self.parents[0], self.grad);
  });
}

template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b, bool transpose_b) {
  if (a.rank() < 2 || b.rank() < 2) throw ShapeError("matmul: operands need rank >= 2");
  const std::size_t m = a.dim(a.rank() - 2);
  const std::size_t k = a.dim(a.rank() - 1);
  const std::size_t bk = transpose_b ? b.dim(b.rank() - 1) : b.dim(b.rank() - 2);
  const std::size_t n = transpose_b ? b.dim(b.rank() - 2) : b.dim(b.rank() - 1);
  if (bk != k) {
    throw ShapeError("matmul: inner extents differ " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const bool shared_b = b.rank() == 2;
  if (!shared_b) {
    if (b.rank() != a.rank() ||
        !std::equal(a.shape().begin(), a.shape().end() - 2, b.shape().begin(), b.shape().end() - 2)) {
      throw ShapeError("matmul: batch extents differ " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
  }
  const std::size_t batch = a.numel() / (m * k);
  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  out_shape.push_back(n);

  const auto& kern = simd::active<Real>();
  std::vector<Real> out(batch * m * n, Real(0));
  const Real* ap = a.data().data();
  const Real* bp = b.data().data();
  const std::size_t b_stride = shared_b ? 0 : k * n;
  if (shared_b && !transpose_b) {
    // One tall gemm over the flattened batch.
    kern.gemm_nn(batch * m, n, k, ap, bp, out.data());
  } else {
    for (std::size_t s = 0; s < batch; ++s) {
      const Real* as = ap + s * m * k;
      const Real* bs = bp + s * b_stride;
      Real* cs = out.data() + s * m * n;
      if (transpose_b) {
        kern.gemm_nt(m, n, k, as, bs, cs);
      } else {
        kern.gemm_nn(m, n, k, as, bs, cs);
      }
    }
  }

  return Tensor<Real>::make_result(
      std::move(out_shape), std::move(out), {a, b},
      [m, n, k, batch, shared_b, transpose_b, b_stride](NodeT<Real>& self) {
        const auto& kk = simd::active<Real>();
        auto& pa = *self.parents[0];
        auto& pb = *self.parents[1];
        const Real* g = self.grad.data();
        if (pa.requires_grad) {
          Real* ga = pa.ensure_grad().data();
          if (shared_b && !transpose_b) {
            kk.gemm_nt(batch * m, k, n, g, pb.data.data(), ga);
          } else {
            for (std::size_t s = 0; s < batch; ++s) {
              const Real* bs = pb.data.data() + s * b_stride;
              if (transpose_b) {
                kk.gemm_nn(m, k, n, g + s * m * n, bs, ga + s * m * k);
              } else {
                kk.gemm_nt(m, k, n, g + s * m * n, bs, ga + s * m * k);
              }
            }
          }
        }
        if (pb.requires_grad) {
          Real* gb = pb.ensure_grad().data();
          if (shared_b && !transpose_b) {
            kk.gemm_tn(k, n, batch * m, pa.data.data(), g, gb);
          } else {
            for (std::size_t s = 0; s < batch; ++s) {
              const Real* as = pa.data.data() + s * m * k;
              Real* gbs = gb + s * b_stride;
              if (transpose_b) {
                kk.gemm_tn(n, k, m, g + s * m * n, as, gbs);
              } else {
                kk.gemm_tn(k, n, m, as, g + s * m * n, gbs);
              }
            }
          }
        }
      });
}

template <typename Real>
Tensor<Real> softmax_lastdim(const Tensor<Real>& x) {
  const std::size_t d = x.dim(x.rank() - 1);
  const std::size_t rows = x.numel() / d;
  std::vector<Real> out(x.numel());
  const Real* xp = x.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = xp + r * d;
    Real* o = out.data() + r * d;
    const Real mx = *std::max_element(row, row + d);
    Real sum = 0;
    for (std::size_t j = 0; j < d; ++j) {
      o[j] = std::exp(row[j] - mx);
      sum += o[j];
    }
    const Real inv = Real(1) / sum;
    for (std::size_t j = 0; j < d; ++j) o[j] *= inv;
  }
  return Tensor<Real>::make_result(x.shape(), std::move(out), {x}, [d, rows](NodeT<Real>& self) {
    auto& p = *self.parents[0];
    auto& gx = p.ensure_grad();
    const auto& kk = simd::active<Real>();
    for (std::size_t r = 0; r < rows; ++r) {
      const Real* y = self.data.data() + r * d;
      const Real* gy = self.grad.data() + r * d;
      const Real inner = kk.dot(y, gy, d);
      Real* gr = gx.data() + r * d;
      for (std::size_t j = 0; j < d; ++j) gr[j] += y[j] * (gy[j] - inner);
    }
  });
}

template <typename Real>
Tensor<Real> layer_norm_affine(const Tensor<Real>& x, const Tensor<Real>& gamma, const Tensor<Real>& beta,
                               double eps) {
  const std::size_t d = x.dim(x.rank() - 1);
  const bool affine = gamma.defined();
  if (affine != beta.defined()) throw ShapeError("layer_norm_affine: gamma and beta must both be given");
  if (affine && (gamma.shape() != Shape{d} || beta.shape() != Shape{d})) {
    throw ShapeError("layer_norm_affine: affine parameters must have shape [" + std::to_string(d) + "]");
  }
  const std::size_t rows = x.numel() / d;
  std::vector<Real> xhat(x.numel());
  std::vector<Real> rstd(rows);
  std::vector<Real> out(x.numel());
  const Real* xp = x.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = xp + r * d;
    double mean = 0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<double>(d);
    double var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(d);
    const double rs = 1.0 / std::sqrt(var + eps);
    rstd[r] = static_cast<Real>(rs);
    for (std::size_t j = 0; j < d; ++j) {
      const Real h = static_cast<Real>((row[j] - mean) * rs);
      xhat[r * d + j] = h;
      out[r * d + j] = affine ? gamma[j] * h + beta[j] : h;
    }
  }
  std::vector<Tensor<Real>> inputs{x};
  if (affine) {
    inputs.push_back(gamma);
    inputs.push_back(beta);
  }
  return Tensor<Real>::make_result(
      x.shape(), std::move(out), std::move(inputs),
      [d, rows, affine, xhat = std::move(xhat), rstd = std::move(rstd)](NodeT<Real>& self) {
        auto& px = *self.parents[0];
        const Real* gy = self.grad.data();
        if (affine) {
          auto& pg = *self.parents[1];
          auto& pbeta = *self.parents[2];
          if (pg.requires_grad) {
            auto& gg = pg.ensure_grad();
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t j = 0; j < d; ++j) gg[j] += gy[r * d + j] * xhat[r * d + j];
            }
          }
          if (pbeta.requires_grad) {
            auto& gb = pbeta.ensure_grad();
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t j = 0; j < d; ++j) gb[j] += gy[r * d + j];
            }
          }
        }
        if (!px.requires_grad) return;
        auto& gx = px.ensure_grad();
        const Real* gamma = affine ? self.parents[1]->data.data() : nullptr;
        std::vector<Real> dh(d);
        for (std::size_t r = 0; r < rows; ++r) {
          Real mean_dh = 0;
          Real mean_dh_h = 0;
          for (std::size_t j = 0; j < d; ++j) {
            dh[j] = gy[r * d + j] * (affine ? gamma[j] : Real(1));
            mean_dh += dh[j];
            mean_dh_h += dh[j] * xhat[r * d + j];
          }
          mean_dh /= static_cast<Real>(d);
          mean_dh_h /= static_cast<Real>(d);
          for (std::size_t j = 0; j < d; ++j) {
            gx[r * d + j] += rstd[r] * (dh[j] - mean_dh - xhat[r * d + j] * mean_dh_h);
          }
        }
      });
}

template <typename Real>
Tensor<Real> gelu(const Tensor<Real>& x) {
  std::vector<Real> out(x.numel());
  constexpr Real kInvSqrt2 = Real(0.70710678118654752440);
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Real v = in[i];
    out[i] = Real(0.5) * v * (Real(1) + std::erf(v * kInvSqrt2));
  }
  return Tensor<Real>::make_result(x.shape(), std::move(out), {x}, [](NodeT<Real>& self) {
    auto& p = *self.parents[0];
    auto& g = p.ensure_grad();
    constexpr double kInvSqrt2Pi = 0.39894228040143267794;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = p.data[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * 0.70710678118654752440));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
      g[i] += static_cast<Real>(self.grad[i] * (cdf + v * pdf));
    }
  });
}

template <typename Real>
Tensor<Real> mean_over_axes(const Tensor<Real>& x, std::vector<std::size_t> axes, bool keepdim) {
  std::sort(axes.begin(), axes.end());
  axes.erase(std::unique(axes.begin(), axes.end()), axes.end());
  const Shape& in_shape = x.shape();
  for (std::size_t ax : axes) {
    if (ax >= in_shape.size()) throw ShapeError("mean_over_axes: axis out of range");
  }
  Shape kept = in_shape;  // reduced axes set to 1
  std::size_t count = 1;
  for (std::size_t ax : axes) {
    count *= in_shape[ax];
    kept[ax] = 1;
  }
  // Source strides over the reduced (kept) layout; reduced axes map to stride 0.
  Shape kept_strides = strides_of(kept);
  for (std::size_t ax : axes) kept_strides[ax] = 0;
  std::vector<Real> acc(shape_numel(kept), Real(0));
  const Real* xp = x.data().data();
  for_each_mapped(in_shape, kept_strides, [&](std::size_t in, std::size_t out) { acc[out] += xp[in]; });
  const Real inv = Real(1) / static_cast<Real>(count);
  for (auto& v : acc) v *= inv;

  Shape out_shape;
  if (keepdim) {
    out_shape = kept;
  } else {
    for (std::size_t i = 0; i < in_shape.size(); ++i) {
      if (!std::binary_search(axes.begin(), axes.end(), i)) out_shape.push_back(in_shape[i]);
    }
    if (out_shape.empty()) out_shape.push_back(1);
  }
  return Tensor<Real>::make_result(
      std::move(out_shape), std::move(acc), {x},
      [in_shape, kept_strides, inv](NodeT<Real>& self) {
        auto& p = *self.parents[0];
        auto& g = p.ensure_grad();
        const Real* gy = self.grad.data();
        for_each_mapped(in_shape, kept_strides, [&](std::size_t in, std::size_t out) { g[in] += gy[out] * inv; });
      });
}

template <typename Real>
Tensor<Real> sum_all(const Tensor<Real>& x) {
  double acc = 0;
  for (Real v : x.data()) acc += v;
  return Tensor<Real>::make_result({1}, {static_cast<Real>(acc)}, {x}, [](NodeT<Real>& self) {
    auto& p = *self.parents[0];
    auto& g = p.ensure_grad();
    const Real gy = self.grad[0];
    for (auto& v : g) v += gy;
  });
}

template <typename Real>
Tensor<Real> mean_all(const Tensor<Real>& x) {
  return scale(sum_all(x), Real(1) / static_cast<Real>(x.numel()));
}

template <typename Real>
Tensor<Real> concat_axis(std::span<const Tensor<Real>> xs, std::size_t axis) {
  if (xs.empty()) throw ShapeError("concat_axis: no inputs");
  const Shape& first = xs[0].shape();
  if (axis >= first.size()) throw ShapeError("concat_axis: axis out of range");
  std::size_t total_axis = 0;
  for (const auto& t : xs) {
    if (t.rank() != first.size()) throw ShapeError("concat_axis: rank mismatch");
    for (std::size_t i = 0; i < first.size(); ++i) {
      if (i != axis && t.dim(i) != first[i]) throw ShapeError("concat_axis: extent mismatch off the concat axis");
    }
    total_axis += t.dim(axis);
  }
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= first[i];
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < first.size(); ++i) inner *= first[i];

  Shape out_shape = first;
  out_shape[axis] = total_axis;
  std::vector<Real> out(shape_numel(out_shape));
  std::vector<std::size_t> widths;
  std::size_t offset = 0;
  for (const auto& t : xs) {
    const std::size_t w = t.dim(axis) * inner;
    widths.push_back(w);
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(t.data().data() + o * w, w, out.data() + o * total_axis * inner + offset);
    }
    offset += w;
  }
  std::vector<Tensor<Real>> inputs(xs.begin(), xs.end());
  return Tensor<Real>::make_result(
      std::move(out_shape), std::move(out), std::move(inputs),
      [outer, row = total_axis * inner, widths = std::move(widths)](NodeT<Real>& self) {
        std::size_t off = 0;
        for (std::size_t i = 0; i < widths.size(); ++i) {
          auto& p = *self.parents[i];
          const std::size_t w = widths[i];
          if (p.requires_grad) {
            auto& g = p.ensure_grad();
            for (std::size_t o = 0; o < outer; ++o) {
              const Real* src = self.grad.data() + o * row + off;
              Real* dst = g.data() + o * w;
              for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
            }
          }
          off += w;
        }
      });
}

template <typename Real>
Tensor<Real> slice_axis(const Tensor<Real>& x, std::size_t axis, std::size_t begin, std::size_t end) {
  if (axis >= x.rank()) throw ShapeError("slice_axis: axis out of range");
  if (begin >= end || end > x.dim(axis)) throw ShapeError("slice_axis: invalid range");
  std::size_t outer = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  std::size_t inner = 1;
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t in_row = x.dim(axis) * inner;
  const std::size_t w = (end - begin) * inner;
  const std::size_t off = begin * inner;
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  std::vector<Real> out(outer * w);
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(x.data().data() + o * in_row + off, w, out.data() + o * w);
  }
  return Tensor<Real>::make_result(std::move(out_shape), std::move(out), {x},
                                   [outer, in_row, w, off](NodeT<Real>& self) {
                                     auto& g = self.parents[0]->ensure_grad();
                                     for (std::size_t o = 0; o < outer; ++o) {
                                       const Real* src = self.grad.data() + o * w;
                                       Real* dst = g.data() + o * in_row + off;
                                       for (std::size_t j = 0; j < w; ++j) dst[j] += src[j];
                                     }
                                   });
}

template <typename Real>
Tensor<Real> broadcast_to(const Tensor<Real>& x, const Shape& shape) {
  const Shape& in = x.shape();
  if (in.size() > shape.size()) throw ShapeError("broadcast_to: target rank too small");
  const std::size_t lead = shape.size() - in.size();
  Shape in_strides = strides_of(in);
  Shape src_strides(shape.size(), 0);
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t target = shape[lead + i];
    if (in[i] != target && in[i] != 1) {
      throw ShapeError("broadcast_to: cannot broadcast " + shape_str(in) + " to " + shape_str(shape));
    }
    src_strides[lead + i] = in[i] == 1 ? 0 : in_strides[i];
  }
  std::vector<Real> out(shape_numel(shape));
  const Real* xp = x.data().data();
  for_each_mapped(shape, src_strides, [&](std::size_t o, std::size_t s) { out[o] = xp[s]; });
  return Tensor<Real>::make_result(shape, std::move(out), {x}, [shape, src_strides](NodeT<Real>& self) {
    auto& g = self.parents[0]->ensure_grad();
    const Real* gy = self.grad.data();
    for_each_mapped(shape, src_strides, [&](std::size_t o, std::size_t s) { g[s] += gy[o]; });
  });
}

template <typename Real>
Tensor<Real> reshape(const Tensor<Real>& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<Real> out(x.data().begin(), x.data().end());
  return Tensor<Real>::make_result(std::move(shape), std::move(out), {x}, [](NodeT<Real>& self) {
    accumulate<Real>(*self.parents[0], self.grad);
  });
}

template <typename Real>
Tensor<Real> permute(const Tensor<Real>& x, const std::vector<std::size_t>& perm) {
  const std::size_t rank = x.rank();
  if (perm.size() != rank) throw ShapeError("permute: permutation rank mismatch");
  std::vector<bool> seen(rank, false);
  for (std::size_t p : perm) {
    if (p >= rank || seen[p]) throw ShapeError("permute: invalid permutation");
    seen[p] = true;
  }
  const Shape in_strides = strides_of(x.shape());
  Shape out_shape(rank);
  Shape src_strides(rank);
  for (std::size_t i = 0; i < rank; ++i) {
    out_shape[i] = x.dim(perm[i]);
    src_strides[i] = in_strides[perm[i]];
  }
  std::vector<Real> out(x.numel());
  const Real* xp = x.data().data();
  for_each_mapped(out_shape, src_strides, [&](std::size_t o, std::size_t s) { out[o] = xp[s]; });
  Shape captured_shape = out_shape;
  return Tensor<Real>::make_result(std::move(out_shape), std::move(out), {x},
                                   [captured_shape, src_strides](NodeT<Real>& self) {
                                     auto& g = self.parents[0]->ensure_grad();
                                     const Real* gy = self.grad.data();
                                     for_each_mapped(captured_shape, src_strides,
                                                     [&](std::size_t o, std::size_t s) { g[s] += gy[o]; });
                                   });
}

template <typename Real>
Tensor<Real> sinusoidal_embed(std::span<const double> levels, std::size_t dim) {
  if (levels.empty() || dim == 0) throw ShapeError("sinusoidal_embed: empty input");
  const std::size_t half = dim / 2;
  std::vector<Real> out(levels.size() * dim, Real(0));
  for (std::size_t i = 0; i < levels.size(); ++i) {
    for (std::size_t k = 0; k < half; ++k) {
      const double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) / static_cast<double>(half));
      const double arg = levels[i] * freq;
      out[i * dim + k] = static_cast<Real>(std::cos(arg));
      out[i * dim + half + k] = static_cast<Real>(std::sin(arg));
    }
  }
  return Tensor<Real>::from({levels.size(), dim}, std::move(out));
}

#define ABOV_INSTANTIATE_OPS(Real)                                                                      \
  template Tensor<Real> add(const Tensor<Real>&, const Tensor<Real>&);                                  \
  template Tensor<Real> sub(const Tensor<Real>&, const Tensor<Real>&);                                  \
  template Tensor<Real> mul(const Tensor<Real>&, const Tensor<Real>&);                                  \
  template Tensor<Real> scale(const Tensor<Real>&, Real);                                               \
  template Tensor<Real> add_scalar(const Tensor<Real>&, Real);                                          \
  template Tensor<Real> matmul(const Tensor<Real>&, const Tensor<Real>&, bool);                         \
  template Tensor<Real> softmax_lastdim(const Tensor<Real>&);                                           \
  template Tensor<Real> layer_norm_affine(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&, \
                                          double);                                                      \
  template Tensor<Real> gelu(const Tensor<Real>&);                                                      \
  template Tensor<Real> mean_over_axes(const Tensor<Real>&, std::vector<std::size_t>, bool);            \
  template Tensor<Real> sum_all(const Tensor<Real>&);                                                   \
  template Tensor<Real> mean_all(const Tensor<Real>&);                                                  \
  template Tensor<Real> concat_axis(std::span<const Tensor<Real>>, std::size_t);                        \
  template Tensor<Real> slice_axis(const Tensor<Real>&, std::size_t, std::size_t, std::size_t);         \
  template Tensor<Real> broadcast_to(const Tensor<Real>&, const Shape&);                                \
  template Tensor<Real> reshape(const Tensor<Real>&, Shape);                                            \
  template Tensor<Real> permute(const Tensor<Real>&, const std::vector<std::size_t>&);                  \
  template Tensor<Real> sinusoidal_embed(std::span<const double>, std::size_t);

ABOV_INSTANTIATE_OPS(float)
ABOV_INSTANTIATE_OPS(double)

#undef ABOV_INSTANTIATE_OPS

}  // namespace abov::ops
