#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "abov/denoiser.hpp"
#include "abov/diffusion.hpp"
#include "abov/optim.hpp"
#include "abov/rng.hpp"
#include "abov/stream.hpp"

namespace abov {

enum class ScheduleKind { Progressive, Random, DisturbanceAugmented };

// "progressive" | "random" | "dist-aug"; ConfigError otherwise.
ScheduleKind parse_schedule_kind(std::string_view name);
std::string_view schedule_kind_name(ScheduleKind kind);

struct NoiseLevelVector {
  std::vector<NoiseLevel> levels;
  ScheduleKind kind = ScheduleKind::Progressive;
};

// Standard deviation of the disturbance, in units of the grid spacing T/L.
inline constexpr double kDisturbanceScale = 0.4;

// Progressive: [T/L, ..., T]. Random: i.i.d. U(1, T). DisturbanceAugmented:
// grid + 0.4 N(0, 1) T/L per slot, clamped to [1, T] and left unsorted.
NoiseLevelVector sample_training_levels(ScheduleKind kind, int window, int max_timestep, Rng& rng);

template <typename Real>
struct TrainingBatch {
  Tensor<Real> reference;  // clean frame preceding the window, [C, H, W]
  Tensor<Real> targets;    // clean frames, [L, C, H, W]
  Tensor<Real> eps;        // [L, C, H, W]
  Tensor<Real> noised;     // forward_noise(targets[m], levels[m], eps[m])
  NoiseLevelVector levels;
  std::int64_t window_start = 0;
};

// Frame window_start is the reference; the next L frames are noised at
// levels drawn for `kind`. DataError when the video is too short.
template <typename Real>
TrainingBatch<Real> make_batch(const Frames& video, std::int64_t window_start, int window, ScheduleKind kind,
                               Rng& rng, const VarianceSchedule& schedule);

// Same, with explicit levels.
template <typename Real>
TrainingBatch<Real> make_batch_with_levels(const Frames& video, std::int64_t window_start,
                                           const NoiseLevelVector& levels, Rng& rng,
                                           const VarianceSchedule& schedule);

// Mean over slots and elements of (eps_hat - eps)^2; the reference frame is
// conditioning only and contributes nothing.
template <typename Real>
Tensor<Real> training_loss(const AdaBovDenoiser<Real>& model, const TrainingBatch<Real>& batch);

template <typename Real>
Tensor<Real> eps_mse(const Tensor<Real>& eps_hat, const Tensor<Real>& eps);

struct TrainOptions {
  int steps = 500;
  int batch = 1;  // windows per optimizer step (gradient accumulation)
  ScheduleKind kind = ScheduleKind::DisturbanceAugmented;
  AdamConfig adam;
  std::uint64_t seed = 42;
};

struct TrainResult {
  std::vector<double> loss_history;  // one mean loss per step
};

// Per step: sample window(s), compute the loss, backward, Adam update
// (skipped when lr == 0). Deterministic given the seed.
TrainResult train(AdaBovDenoiser<float>& model, const Frames& dataset, const VarianceSchedule& schedule,
                  const TrainOptions& options);

// Finite-difference check of training_loss over every parameter of a 64-bit
// model built from `config`. The model is perturbed first so zero-initialized
// layers pass gradient to everything upstream.
GradCheckReport denoiser_grad_check(const DenoiserConfig& config, std::uint64_t seed,
                                    const GradCheckOptions& options = {});

}  // namespace abov
