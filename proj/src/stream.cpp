#include "abov/stream.hpp"

#include <algorithm>
#include <string>

#include "abov/errors.hpp"

namespace abov {

void GenerationConfig::validate() const {
  if (window < 1) throw ConfigError("generation: L must be >= 1");
  if (substeps < 1) throw ConfigError("generation: n must be >= 1");
  if (frames < 1) throw ConfigError("generation: K must be >= 1");
}

Tensor<float> ModelPredictor::predict(const Tensor<float>& window, std::span<const NoiseLevel> levels,
                                      const Frame& reference) {
  NoGradGuard no_grad;
  return model_.forward(window, levels, reference);
}

NoiseLevel slot_level(int max_timestep, int window, int substeps, int slot, int substeps_done) {
  return grid_level(max_timestep, window, substeps, (slot + 1) * substeps - substeps_done);
}

Tensor<float> stack_frames(std::span<const Frame> frames) {
  if (frames.empty()) throw ShapeError("stack_frames: no frames");
  const Shape& fs = frames[0].shape();
  std::vector<float> data;
  data.reserve(frames.size() * frames[0].numel());
  for (const auto& f : frames) {
    if (f.shape() != fs) throw ShapeError("stack_frames: frame shapes differ");
    data.insert(data.end(), f.data().begin(), f.data().end());
  }
  Shape shape{frames.size()};
  shape.insert(shape.end(), fs.begin(), fs.end());
  return Tensor<float>::from(std::move(shape), std::move(data));
}

namespace {

Frame gaussian_frame(Rng& rng, const Shape& shape, double scale) {
  std::vector<float> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<float>(scale * rng.normal());
  return Frame::from(shape, std::move(v));
}

}  // namespace

StreamState init_stream(std::span<const Frame> initial_frames, const GenerationConfig& config,
                        const VarianceSchedule& schedule, const Rng& rng) {
  config.validate();
  const int l = config.window;
  if (initial_frames.size() != static_cast<std::size_t>(l) + 1) {
    throw ConfigError("init_stream: need exactly L + 1 = " + std::to_string(l + 1) + " clean frames, got " +
                      std::to_string(initial_frames.size()));
  }
  const Shape& fs = initial_frames[0].shape();
  for (const auto& f : initial_frames) {
    if (f.shape() != fs) throw ConfigError("init_stream: conditioning frames differ in shape");
  }

  StreamState state;
  state.schedule = &schedule;
  state.substeps = config.substeps;
  state.append_noise_scale = config.append_noise_scale;
  state.reference = {initial_frames[0].detach(), 0};
  Rng init_rng = rng.split("init_noise");
  for (int m = 0; m < l; ++m) {
    const NoiseLevel level = slot_level(schedule.max_timestep(), l, config.substeps, m, 0);
    Frame eps = gaussian_frame(init_rng, fs, 1.0);
    state.window.frames.push_back(forward_noise(initial_frames[static_cast<std::size_t>(m) + 1], level, eps, schedule));
    state.window.levels.push_back(level);
    state.window.indices.push_back(m + 1);
  }
  state.rng = rng.split("append_noise");
  state.iteration = 1;
  state.substep = 0;
  return state;
}

StreamState init_stream_self_start(const Frame& seed_frame, const GenerationConfig& config,
                                   const VarianceSchedule& schedule, const Rng& rng) {
  Frames frames(static_cast<std::size_t>(config.window) + 1, seed_frame);
  return init_stream(frames, config, schedule, rng);
}

void substep(StreamState& state, EpsPredictor& predictor) {
  if (state.substep >= state.substeps) throw InternalError("substep: iteration already complete");
  const int l = state.window_size();
  const int t_max = state.schedule->max_timestep();

  Tensor<float> window = stack_frames(state.window.frames);
  Tensor<float> eps = predictor.predict(window, state.window.levels, state.reference.values);
  state.evaluations += 1;
  if (eps.shape() != window.shape()) throw ShapeError("substep: predictor output shape mismatch");

  const Shape fs = state.window.frames[0].shape();
  const std::size_t per = shape_numel(fs);
  for (int m = 0; m < l; ++m) {
    const int target_index = (m + 1) * state.substeps - (state.substep + 1);
    if (target_index < 0) throw InternalError("substep: level would drop below 0");
    const NoiseLevel from = state.window.levels[static_cast<std::size_t>(m)];
    const NoiseLevel to = slot_level(t_max, l, state.substeps, m, state.substep + 1);
    auto slice = eps.data().subspan(static_cast<std::size_t>(m) * per, per);
    Tensor<float> eps_m = Tensor<float>::from(fs, std::vector<float>(slice.begin(), slice.end()));
    auto& frame = state.window.frames[static_cast<std::size_t>(m)];
    frame = ddim_step(frame, eps_m, from, to, *state.schedule);
    state.window.levels[static_cast<std::size_t>(m)] = to;
  }
  state.substep += 1;
  if (state.on_substep) state.on_substep(state);
}

EmittedFrame iterate(StreamState& state, EpsPredictor& predictor) {
  if (state.substep != 0) throw InternalError("iterate: must start at an iteration boundary");
  for (int i = 0; i < state.substeps; ++i) substep(state, predictor);

  const int l = state.window_size();
  const int t_max = state.schedule->max_timestep();
  EmittedFrame out{state.window.frames.front(), state.window.indices.front()};
  state.reference = {out.values, out.frame_index};

  state.window.frames.erase(state.window.frames.begin());
  state.window.indices.erase(state.window.indices.begin());
  const Shape fs = out.values.shape();
  state.window.frames.push_back(gaussian_frame(state.rng, fs, state.append_noise_scale));
  state.window.indices.push_back(state.window.indices.empty() ? out.frame_index + 1
                                                              : state.window.indices.back() + 1);
  for (int m = 0; m < l; ++m) {
    state.window.levels[static_cast<std::size_t>(m)] = slot_level(t_max, l, state.substeps, m, 0);
  }
  state.iteration += 1;
  state.substep = 0;
  state.emitted += 1;
  return out;
}

std::vector<EmittedFrame> run(StreamState& state, EpsPredictor& predictor, int frames) {
  if (frames < 1) throw ConfigError("run: K must be >= 1");
  std::vector<EmittedFrame> out;
  out.reserve(static_cast<std::size_t>(frames));
  for (int i = 0; i < frames; ++i) out.push_back(iterate(state, predictor));
  return out;
}

}  // namespace abov
