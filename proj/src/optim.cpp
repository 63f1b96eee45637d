#include "abov/optim.hpp"

#include <algorithm>
#include <cmath>

#include "abov/errors.hpp"
#include "abov/rng.hpp"

namespace abov {

template <typename Real>
void adam_step(std::span<Tensor<Real>* const> params, AdamState<Real>& state) {
  const AdamConfig& c = state.config;
  if (!(c.lr > 0.0)) throw ConfigError("adam: learning rate must be positive");
  if (state.m.empty()) {
    for (const Tensor<Real>* p : params) {
      state.m.emplace_back(p->numel(), Real(0));
      state.v.emplace_back(p->numel(), Real(0));
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam: parameter count changed between steps");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m[i].size() != params[i]->numel()) throw ShapeError("adam: moment shape mismatch");
  }

  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double bc1 = 1.0 - std::pow(c.beta1, t);
  const double bc2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<Real>& p = *params[i];
    auto data = p.mutable_data();
    const bool has_grad = p.has_grad();
    auto grad = p.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double g = has_grad ? static_cast<double>(grad[j]) : 0.0;
      const double mj = c.beta1 * m[j] + (1.0 - c.beta1) * g;
      const double vj = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
      m[j] = static_cast<Real>(mj);
      v[j] = static_cast<Real>(vj);
      const double m_hat = mj / bc1;
      const double v_hat = vj / bc2;
      data[j] = static_cast<Real>(data[j] - c.lr * m_hat / (std::sqrt(v_hat) + c.eps));
    }
  }
}

template void adam_step<float>(std::span<Tensor<float>* const>, AdamState<float>&);
template void adam_step<double>(std::span<Tensor<double>* const>, AdamState<double>&);

GradCheckReport grad_check(const std::function<Tensor<double>()>& loss,
                           std::span<Tensor<double>* const> inputs, const GradCheckOptions& options) {
  for (Tensor<double>* t : inputs) t->zero_grad();
  {
    Tensor<double> l = loss();
    l.backward();
  }
  std::vector<std::vector<double>> analytic;
  for (Tensor<double>* t : inputs) {
    if (t->has_grad()) {
      analytic.emplace_back(t->grad().begin(), t->grad().end());
    } else {
      analytic.emplace_back(t->numel(), 0.0);
    }
  }

  GradCheckReport report;
  Rng rng(options.seed, Rng::hash("grad_check"));
  NoGradGuard no_grad;
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    Tensor<double>& t = *inputs[ti];
    const std::size_t n = t.numel();
    std::vector<std::size_t> coords;
    if (options.max_coords_per_tensor == 0 || options.max_coords_per_tensor >= n) {
      coords.resize(n);
      for (std::size_t j = 0; j < n; ++j) coords[j] = j;
    } else {
      for (std::size_t j = 0; j < options.max_coords_per_tensor; ++j) coords.push_back(rng() % n);
    }
    for (std::size_t j : coords) {
      auto data = t.mutable_data();
      const double orig = data[j];
      data[j] = orig + options.step;
      const double up = loss().item();
      data[j] = orig - options.step;
      const double down = loss().item();
      data[j] = orig;
      const double numeric = (up - down) / (2.0 * options.step);
      const double a = analytic[ti][j];
      const double abs_err = std::abs(a - numeric);
      const double denom = std::max({std::abs(a), std::abs(numeric), options.denom_floor});
      const double rel = abs_err / denom;
      report.max_abs_error = std::max(report.max_abs_error, abs_err);
      if (report.checked == 0 || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst = std::to_string(ti) + "[" + std::to_string(j) + "]";
      }
      report.checked += 1;
    }
  }
  report.passed = report.max_rel_error < options.tol;
  return report;
}

}  // namespace abov
