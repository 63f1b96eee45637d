#pragma once

#include <cstddef>
#include <vector>

#include "abov/tensor.hpp"

namespace abov {

// Real-valued noise level t in [0, T]. Fractional levels come from splitting
// each window step T/L into n substeps.
using NoiseLevel = double;

// Linear beta schedule with cumulative products. Index t in [1, T] refers to
// diffusion step t; alpha_bar(0) = 1.
class VarianceSchedule {
 public:
  VarianceSchedule(int max_timestep, double beta_start, double beta_end);

  int max_timestep() const noexcept { return max_timestep_; }
  double beta_start() const noexcept { return beta_start_; }
  double beta_end() const noexcept { return beta_end_; }

  double beta(int t) const;       // t in [1, T]
  double alpha(int t) const;      // 1 - beta(t)
  double alpha_bar(int t) const;  // t in [0, T]
  double log_alpha_bar(int t) const;

  // exp of the linear interpolation of log alpha_bar between floor(t) and
  // ceil(t); exact at integers. RangeError outside [0, T].
  double alpha_bar_at(NoiseLevel t) const;

 private:
  int max_timestep_;
  double beta_start_;
  double beta_end_;
  std::vector<double> beta_;           // beta_[t-1] = beta(t)
  std::vector<double> log_alpha_bar_;  // size T + 1, entry 0 is 0
};

// ConfigError unless T >= 1 and 0 < beta_start <= beta_end < 1.
VarianceSchedule build_schedule(int max_timestep, double beta_start, double beta_end);

// sqrt(ab) * z0 + sqrt(1 - ab) * eps with ab = alpha_bar(t).
template <typename Real>
Tensor<Real> forward_noise(const Tensor<Real>& z0, NoiseLevel t, const Tensor<Real>& eps,
                           const VarianceSchedule& schedule);

// Deterministic DDIM transport from t_from down to t_to with a fixed eps
// prediction. t_to == t_from returns z_t unchanged; t_to == 0 returns the
// clean estimate.
template <typename Real>
Tensor<Real> ddim_step(const Tensor<Real>& z_t, const Tensor<Real>& eps_hat, NoiseLevel t_from, NoiseLevel t_to,
                       const VarianceSchedule& schedule);

// Scalar gain c(s, t) applied by ddim_step(t -> s) when eps_hat = sqrt(1 - ab(t)) z_t,
// i.e. sqrt(ab(s) ab(t)) + sqrt((1 - ab(s))(1 - ab(t))).
double ddim_oracle_gain(const VarianceSchedule& schedule, NoiseLevel s, NoiseLevel t);

// Level j of the uniform grid with n * L intervals on [0, T]: j * T / (n * L).
// Every caller uses this one expression so grid levels compare exactly.
NoiseLevel grid_level(int max_timestep, int window, int substeps, int index);

// {0, T/(nL), 2T/(nL), ..., T}: nL + 1 levels.
std::vector<NoiseLevel> sampling_grid(int max_timestep, int window, int substeps);

}  // namespace abov
