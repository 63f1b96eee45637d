#include "abov/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "abov/errors.hpp"

namespace abov {

Frames gen_ar1_video(const Ar1Params& params, int length, Rng& rng) {
  if (length < 1) throw ConfigError("gen_ar1_video: length must be >= 1");
  if (!(params.rho >= 0.0 && params.rho < 1.0)) throw ConfigError("gen_ar1_video: rho must lie in [0, 1)");
  const std::size_t n = shape_numel(params.frame_shape);
  const double innovation = std::sqrt(1.0 - params.rho * params.rho);
  Frames out;
  out.reserve(static_cast<std::size_t>(length));
  std::vector<double> state(n);
  for (auto& v : state) v = rng.normal();
  for (int i = 0; i < length; ++i) {
    if (i > 0) {
      for (auto& v : state) v = params.rho * v + innovation * rng.normal();
    }
    std::vector<float> frame(state.begin(), state.end());
    out.push_back(Frame::from(params.frame_shape, std::move(frame)));
  }
  return out;
}

Frames gen_moving_bar_video(const MovingBarParams& params, int length) {
  if (length < 1) throw ConfigError("gen_moving_bar_video: length must be >= 1");
  if (params.frame_shape.size() != 3) throw ShapeError("gen_moving_bar_video: frame shape must be [C, H, W]");
  const std::size_t c = params.frame_shape[0];
  const std::size_t h = params.frame_shape[1];
  const auto w = static_cast<std::int64_t>(params.frame_shape[2]);
  Frames out;
  out.reserve(static_cast<std::size_t>(length));
  for (int t = 0; t < length; ++t) {
    std::vector<float> frame(shape_numel(params.frame_shape), 0.0f);
    const std::int64_t shift = static_cast<std::int64_t>(params.phase) + static_cast<std::int64_t>(params.velocity) * t;
    for (std::int64_t x = 0; x < w; ++x) {
      const std::int64_t rel = ((x - shift) % w + w) % w;
      if (rel >= params.bar_width) continue;
      for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < h; ++y) frame[(ch * h + y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] = 1.0f;
      }
    }
    out.push_back(Frame::from(params.frame_shape, std::move(frame)));
  }
  return out;
}

template <typename Real>
Tensor<Real> analytic_eps(const Tensor<Real>& z_t, NoiseLevel t, const VarianceSchedule& schedule) {
  if (!(t > 0.0)) throw RangeError("analytic_eps: eps is undefined at level 0");
  const double gain = std::sqrt(1.0 - schedule.alpha_bar_at(t));
  std::vector<Real> out(z_t.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Real>(gain * z_t[i]);
  return Tensor<Real>::from(z_t.shape(), std::move(out));
}

Tensor<float> OraclePredictor::predict(const Tensor<float>& window, std::span<const NoiseLevel> levels,
                                       const Frame& /*reference*/) {
  if (window.rank() < 1 || levels.size() != window.dim(0)) {
    throw ShapeError("oracle: need one level per window slot");
  }
  const std::size_t per = window.numel() / window.dim(0);
  std::vector<float> out(window.numel());
  for (std::size_t m = 0; m < levels.size(); ++m) {
    if (!(levels[m] > 0.0)) throw RangeError("oracle: eps is undefined at level 0");
    const double gain = std::sqrt(1.0 - schedule_.alpha_bar_at(levels[m]));
    for (std::size_t i = 0; i < per; ++i) out[m * per + i] = static_cast<float>(gain * window[m * per + i]);
  }
  return Tensor<float>::from(window.shape(), std::move(out));
}

double oracle_emitted_variance(const VarianceSchedule& schedule, int window, int substeps,
                               std::int64_t frame_index) {
  if (frame_index < 1) throw RangeError("oracle_emitted_variance: frame indices start at 1");
  // Frame i <= L enters at grid index i * n (noised data has unit variance);
  // later frames enter as pure noise at level T (grid index n * L).
  const std::int64_t entry = std::min<std::int64_t>(frame_index, window) * substeps;
  double var = 1.0;
  for (std::int64_t j = entry; j > 0; --j) {
    const double c = ddim_oracle_gain(schedule, grid_level(schedule.max_timestep(), window, substeps, static_cast<int>(j - 1)),
                                      grid_level(schedule.max_timestep(), window, substeps, static_cast<int>(j)));
    var *= c * c;
  }
  return var;
}

template Tensor<float> analytic_eps(const Tensor<float>&, NoiseLevel, const VarianceSchedule&);
template Tensor<double> analytic_eps(const Tensor<double>&, NoiseLevel, const VarianceSchedule&);

}  // namespace abov
