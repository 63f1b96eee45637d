#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "abov/tensor.hpp"

namespace abov {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam without weight decay. Moments are created lazily on the
// first step and stay shape-aligned with their parameter.
template <typename Real>
struct AdamState {
  AdamConfig config;
  std::uint64_t step_count = 0;
  std::vector<std::vector<Real>> m;
  std::vector<std::vector<Real>> v;
};

// Applies one update using each parameter's accumulated grad (absent grad
// counts as zero). Throws ConfigError for lr <= 0 and ShapeError when the
// parameter list no longer matches the moments.
template <typename Real>
void adam_step(std::span<Tensor<Real>* const> params, AdamState<Real>& state);

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "<param index>[<coordinate>]"
  bool passed = false;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tol = 1e-4;
  // Relative error is |a - n| / max(|a|, |n|, denom_floor).
  double denom_floor = 1e-6;
  // 0 checks every coordinate; otherwise a deterministic sample per tensor.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
};

// Compares reverse-mode gradients of `loss` (a deterministic closure building
// a fresh tape each call) against central finite differences for every
// coordinate of `inputs`.
GradCheckReport grad_check(const std::function<Tensor<double>()>& loss,
                           std::span<Tensor<double>* const> inputs, const GradCheckOptions& options = {});

}  // namespace abov
