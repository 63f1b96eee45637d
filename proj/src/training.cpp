#include "abov/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "abov/errors.hpp"
#include "abov/ops.hpp"
#include "abov/synthetic.hpp"

namespace abov {

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "progressive") return ScheduleKind::Progressive;
  if (name == "random") return ScheduleKind::Random;
  if (name == "dist-aug" || name == "disturbance-augmented") return ScheduleKind::DisturbanceAugmented;
  throw ConfigError("unknown training schedule '" + std::string(name) + "'");
}

std::string_view schedule_kind_name(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::Progressive:
      return "progressive";
    case ScheduleKind::Random:
      return "random";
    case ScheduleKind::DisturbanceAugmented:
      return "dist-aug";
  }
  return "unknown";
}

NoiseLevelVector sample_training_levels(ScheduleKind kind, int window, int max_timestep, Rng& rng) {
  if (window < 1 || max_timestep < 1) throw ConfigError("sample_training_levels: L and T must be >= 1");
  NoiseLevelVector out;
  out.kind = kind;
  out.levels.resize(static_cast<std::size_t>(window));
  const double t_max = max_timestep;
  const double spacing = t_max / window;
  for (int m = 0; m < window; ++m) {
    const NoiseLevel grid = grid_level(max_timestep, window, 1, m + 1);
    NoiseLevel level = grid;
    switch (kind) {
      case ScheduleKind::Progressive:
        break;
      case ScheduleKind::Random:
        level = rng.uniform(1.0, t_max);
        break;
      case ScheduleKind::DisturbanceAugmented:
        level = std::clamp(grid + kDisturbanceScale * rng.normal() * spacing, 1.0, t_max);
        break;
      default:
        throw ConfigError("sample_training_levels: unknown schedule kind");
    }
    out.levels[static_cast<std::size_t>(m)] = level;
  }
  return out;
}

template <typename Real>
TrainingBatch<Real> make_batch_with_levels(const Frames& video, std::int64_t window_start,
                                           const NoiseLevelVector& levels, Rng& rng,
                                           const VarianceSchedule& schedule) {
  const auto l = static_cast<std::int64_t>(levels.levels.size());
  if (l < 1) throw ConfigError("make_batch: empty level vector");
  if (window_start < 0 || window_start + l >= static_cast<std::int64_t>(video.size())) {
    throw DataError("make_batch: need L + 1 = " + std::to_string(l + 1) + " frames from index " +
                    std::to_string(window_start) + ", video has " + std::to_string(video.size()));
  }
  const Shape& fs = video[0].shape();
  const std::size_t per = shape_numel(fs);
  std::vector<Real> targets;
  std::vector<Real> eps;
  std::vector<Real> noised;
  targets.reserve(static_cast<std::size_t>(l) * per);
  eps.reserve(targets.capacity());
  noised.reserve(targets.capacity());
  for (std::int64_t m = 0; m < l; ++m) {
    const Frame& src = video[static_cast<std::size_t>(window_start + 1 + m)];
    std::vector<Real> clean(src.data().begin(), src.data().end());
    std::vector<Real> e(per);
    for (auto& v : e) v = static_cast<Real>(rng.normal());
    Tensor<Real> clean_t = Tensor<Real>::from(fs, clean);
    Tensor<Real> eps_t = Tensor<Real>::from(fs, e);
    Tensor<Real> z = forward_noise(clean_t, levels.levels[static_cast<std::size_t>(m)], eps_t, schedule);
    targets.insert(targets.end(), clean.begin(), clean.end());
    eps.insert(eps.end(), e.begin(), e.end());
    noised.insert(noised.end(), z.data().begin(), z.data().end());
  }
  Shape ws{static_cast<std::size_t>(l)};
  ws.insert(ws.end(), fs.begin(), fs.end());
  const Frame& ref = video[static_cast<std::size_t>(window_start)];
  TrainingBatch<Real> batch;
  batch.reference = Tensor<Real>::from(fs, std::vector<Real>(ref.data().begin(), ref.data().end()));
  batch.targets = Tensor<Real>::from(ws, std::move(targets));
  batch.eps = Tensor<Real>::from(ws, std::move(eps));
  batch.noised = Tensor<Real>::from(ws, std::move(noised));
  batch.levels = levels;
  batch.window_start = window_start;
  return batch;
}

template <typename Real>
TrainingBatch<Real> make_batch(const Frames& video, std::int64_t window_start, int window, ScheduleKind kind,
                               Rng& rng, const VarianceSchedule& schedule) {
  NoiseLevelVector levels = sample_training_levels(kind, window, schedule.max_timestep(), rng);
  return make_batch_with_levels<Real>(video, window_start, levels, rng, schedule);
}

template <typename Real>
Tensor<Real> eps_mse(const Tensor<Real>& eps_hat, const Tensor<Real>& eps) {
  Tensor<Real> diff = ops::sub(eps_hat, eps);
  return ops::mean_all(ops::mul(diff, diff));
}

template <typename Real>
Tensor<Real> training_loss(const AdaBovDenoiser<Real>& model, const TrainingBatch<Real>& batch) {
  Tensor<Real> eps_hat = model.forward(batch.noised, batch.levels.levels, batch.reference);
  Tensor<Real> loss = eps_mse(eps_hat, batch.eps);
  if (!std::isfinite(static_cast<double>(loss.item()))) throw NumericsError("training loss is not finite");
  return loss;
}

TrainResult train(AdaBovDenoiser<float>& model, const Frames& dataset, const VarianceSchedule& schedule,
                  const TrainOptions& options) {
  if (options.steps < 1) throw ConfigError("train: steps must be >= 1");
  if (options.batch < 1) throw ConfigError("train: batch must be >= 1");
  const int l = model.config().window;
  const auto max_start = static_cast<std::int64_t>(dataset.size()) - l - 1;
  if (max_start < 0) throw DataError("train: dataset shorter than L + 1 frames");

  Rng rng = Rng(options.seed).split("train");
  Rng start_rng = rng.split("window_start");
  Rng batch_rng = rng.split("batch");
  auto params = model.parameters();
  AdamState<float> adam{options.adam};
  TrainResult result;
  result.loss_history.reserve(static_cast<std::size_t>(options.steps));

  for (int step = 0; step < options.steps; ++step) {
    for (auto* p : params) p->zero_grad();
    double step_loss = 0.0;
    for (int b = 0; b < options.batch; ++b) {
      const auto start = static_cast<std::int64_t>(start_rng() % static_cast<std::uint64_t>(max_start + 1));
      TrainingBatch<float> batch = make_batch<float>(dataset, start, l, options.kind, batch_rng, schedule);
      Tensor<float> loss = training_loss(model, batch);
      step_loss += loss.item();
      if (options.batch > 1) loss = ops::scale(loss, 1.0f / static_cast<float>(options.batch));
      loss.backward();
    }
    result.loss_history.push_back(step_loss / options.batch);
    if (options.adam.lr > 0.0) adam_step<float>(params, adam);
  }
  return result;
}

GradCheckReport denoiser_grad_check(const DenoiserConfig& config, std::uint64_t seed,
                                    const GradCheckOptions& options) {
  AdaBovDenoiser<double> model(config, seed);
  model.perturb(0.1, seed);
  const VarianceSchedule schedule = build_schedule(1000, 1e-4, 0.02);
  Rng rng = Rng(seed).split("grad_check");
  const Frames video = gen_ar1_video({0.5, config.frame_shape()}, config.window + 1, rng);
  const TrainingBatch<double> batch =
      make_batch<double>(video, 0, config.window, ScheduleKind::DisturbanceAugmented, rng, schedule);
  auto params = model.parameters();
  return grad_check([&] { return training_loss(model, batch); }, params, options);
}

template TrainingBatch<float> make_batch(const Frames&, std::int64_t, int, ScheduleKind, Rng&,
                                         const VarianceSchedule&);
template TrainingBatch<double> make_batch(const Frames&, std::int64_t, int, ScheduleKind, Rng&,
                                          const VarianceSchedule&);
template TrainingBatch<float> make_batch_with_levels(const Frames&, std::int64_t, const NoiseLevelVector&, Rng&,
                                                     const VarianceSchedule&);
template TrainingBatch<double> make_batch_with_levels(const Frames&, std::int64_t, const NoiseLevelVector&, Rng&,
                                                      const VarianceSchedule&);
template Tensor<float> eps_mse(const Tensor<float>&, const Tensor<float>&);
template Tensor<double> eps_mse(const Tensor<double>&, const Tensor<double>&);
template Tensor<float> training_loss(const AdaBovDenoiser<float>&, const TrainingBatch<float>&);
template Tensor<double> training_loss(const AdaBovDenoiser<double>&, const TrainingBatch<double>&);

}  // namespace abov
