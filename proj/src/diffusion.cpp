#include "abov/diffusion.hpp"

#include <cmath>
#include <string>

#include "abov/errors.hpp"

namespace abov {

VarianceSchedule::VarianceSchedule(int max_timestep, double beta_start, double beta_end)
    : max_timestep_(max_timestep), beta_start_(beta_start), beta_end_(beta_end) {
  if (max_timestep < 1) throw ConfigError("schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw ConfigError("schedule: require 0 < beta_start <= beta_end < 1");
  }
  beta_.resize(static_cast<std::size_t>(max_timestep));
  log_alpha_bar_.resize(static_cast<std::size_t>(max_timestep) + 1);
  log_alpha_bar_[0] = 0.0;
  long double acc = 0.0L;
  for (int t = 1; t <= max_timestep; ++t) {
    const double frac = max_timestep == 1 ? 0.0 : static_cast<double>(t - 1) / (max_timestep - 1);
    const double b = beta_start + (beta_end - beta_start) * frac;
    beta_[static_cast<std::size_t>(t - 1)] = b;
    acc += std::log1p(-static_cast<long double>(b));
    log_alpha_bar_[static_cast<std::size_t>(t)] = static_cast<double>(acc);
  }
}

double VarianceSchedule::beta(int t) const {
  if (t < 1 || t > max_timestep_) throw RangeError("beta: t outside [1, T]");
  return beta_[static_cast<std::size_t>(t - 1)];
}

double VarianceSchedule::alpha(int t) const { return 1.0 - beta(t); }

double VarianceSchedule::log_alpha_bar(int t) const {
  if (t < 0 || t > max_timestep_) throw RangeError("alpha_bar: t outside [0, T]");
  return log_alpha_bar_[static_cast<std::size_t>(t)];
}

double VarianceSchedule::alpha_bar(int t) const { return std::exp(log_alpha_bar(t)); }

double VarianceSchedule::alpha_bar_at(NoiseLevel t) const {
  if (!(t >= 0.0 && t <= static_cast<double>(max_timestep_))) {
    throw RangeError("alpha_bar_at: level " + std::to_string(t) + " outside [0, T]");
  }
  const double lo = std::floor(t);
  const auto i = static_cast<std::size_t>(lo);
  const double frac = t - lo;
  if (frac == 0.0) return std::exp(log_alpha_bar_[i]);
  return std::exp((1.0 - frac) * log_alpha_bar_[i] + frac * log_alpha_bar_[i + 1]);
}

VarianceSchedule build_schedule(int max_timestep, double beta_start, double beta_end) {
  return VarianceSchedule(max_timestep, beta_start, beta_end);
}

template <typename Real>
Tensor<Real> forward_noise(const Tensor<Real>& z0, NoiseLevel t, const Tensor<Real>& eps,
                           const VarianceSchedule& schedule) {
  if (z0.shape() != eps.shape()) {
    throw ShapeError("forward_noise: " + shape_str(z0.shape()) + " vs " + shape_str(eps.shape()));
  }
  const double ab = schedule.alpha_bar_at(t);
  if (t == 0.0) return z0.detach();
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  std::vector<Real> out(z0.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Real>(a * z0[i] + b * eps[i]);
  return Tensor<Real>::from(z0.shape(), std::move(out));
}

template <typename Real>
Tensor<Real> ddim_step(const Tensor<Real>& z_t, const Tensor<Real>& eps_hat, NoiseLevel t_from, NoiseLevel t_to,
                       const VarianceSchedule& schedule) {
  if (z_t.shape() != eps_hat.shape()) {
    throw ShapeError("ddim_step: " + shape_str(z_t.shape()) + " vs " + shape_str(eps_hat.shape()));
  }
  if (t_to > t_from) throw OrderError("ddim_step: t_to must not exceed t_from");
  const double ab_from = schedule.alpha_bar_at(t_from);
  const double ab_to = schedule.alpha_bar_at(t_to);
  if (t_to == t_from) return z_t.detach();
  if (!(ab_from > 0.0)) throw SingularityError("ddim_step: alpha_bar(t_from) is zero");
  const double s_from = std::sqrt(1.0 - ab_from);
  const double inv_a_from = 1.0 / std::sqrt(ab_from);
  const double a_to = std::sqrt(ab_to);
  const double s_to = std::sqrt(1.0 - ab_to);
  std::vector<Real> out(z_t.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x0 = (z_t[i] - s_from * eps_hat[i]) * inv_a_from;
    out[i] = static_cast<Real>(t_to == 0.0 ? x0 : a_to * x0 + s_to * eps_hat[i]);
  }
  return Tensor<Real>::from(z_t.shape(), std::move(out));
}

double ddim_oracle_gain(const VarianceSchedule& schedule, NoiseLevel s, NoiseLevel t) {
  const double as = schedule.alpha_bar_at(s);
  const double at = schedule.alpha_bar_at(t);
  return std::sqrt(as * at) + std::sqrt((1.0 - as) * (1.0 - at));
}

NoiseLevel grid_level(int max_timestep, int window, int substeps, int index) {
  return static_cast<double>(index) * static_cast<double>(max_timestep) /
         (static_cast<double>(window) * static_cast<double>(substeps));
}

std::vector<NoiseLevel> sampling_grid(int max_timestep, int window, int substeps) {
  if (window < 1 || substeps < 1) throw ConfigError("sampling_grid: L and n must be >= 1");
  const int intervals = window * substeps;
  std::vector<NoiseLevel> grid(static_cast<std::size_t>(intervals) + 1);
  for (int j = 0; j <= intervals; ++j) grid[static_cast<std::size_t>(j)] = grid_level(max_timestep, window, substeps, j);
  return grid;
}

template Tensor<float> forward_noise(const Tensor<float>&, NoiseLevel, const Tensor<float>&,
                                     const VarianceSchedule&);
template Tensor<double> forward_noise(const Tensor<double>&, NoiseLevel, const Tensor<double>&,
                                      const VarianceSchedule&);
template Tensor<float> ddim_step(const Tensor<float>&, const Tensor<float>&, NoiseLevel, NoiseLevel,
                                 const VarianceSchedule&);
template Tensor<double> ddim_step(const Tensor<double>&, const Tensor<double>&, NoiseLevel, NoiseLevel,
                                  const VarianceSchedule&);

}  // namespace abov
