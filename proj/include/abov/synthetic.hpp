#pragma once

#include <cstdint>

#include "abov/diffusion.hpp"
#include "abov/rng.hpp"
#include "abov/stream.hpp"

namespace abov {

// Per-pixel AR(1): x_i = rho x_{i-1} + sqrt(1 - rho^2) w, w ~ N(0, 1), with a
// stationary N(0, 1) start. rho = 0 gives i.i.d. standard-normal frames.
struct Ar1Params {
  double rho = 0.0;
  Shape frame_shape{1, 16, 16};
};

Frames gen_ar1_video(const Ar1Params& params, int length, Rng& rng);

// Vertical bright bar (value 1 on 0 background) moving right by `velocity`
// pixels per frame with wraparound.
struct MovingBarParams {
  Shape frame_shape{1, 16, 16};
  int bar_width = 3;
  int velocity = 1;
  int phase = 0;
};

Frames gen_moving_bar_video(const MovingBarParams& params, int length);

// Bayes-optimal eps prediction for i.i.d. N(0, 1) data: sqrt(1 - ab(t)) z_t.
// RangeError at t = 0, where eps is undefined.
template <typename Real>
Tensor<Real> analytic_eps(const Tensor<Real>& z_t, NoiseLevel t, const VarianceSchedule& schedule);

// analytic_eps applied slot-wise behind the sampler's predictor interface.
// Ignores the reference frame and every learned component.
class OraclePredictor final : public EpsPredictor {
 public:
  explicit OraclePredictor(const VarianceSchedule& schedule) : schedule_(schedule) {}
  Tensor<float> predict(const Tensor<float>& window, std::span<const NoiseLevel> levels,
                        const Frame& reference) override;

 private:
  const VarianceSchedule& schedule_;
};

// Closed-form per-pixel variance of frame `frame_index` (1-based) emitted by
// oracle-driven stream sampling of i.i.d. N(0, 1) data: the product of
// c(s, t)^2 over every substep the frame goes through.
double oracle_emitted_variance(const VarianceSchedule& schedule, int window, int substeps,
                               std::int64_t frame_index);

}  // namespace abov
