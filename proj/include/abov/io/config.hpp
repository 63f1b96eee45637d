#pragma once

// Flat `key = value` run configuration. Lines starting with '#' and trailing
// '# ...' are comments. Unknown keys and unparsable values raise ConfigError.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "abov/denoiser.hpp"
#include "abov/diffusion.hpp"
#include "abov/stream.hpp"
#include "abov/training.hpp"

namespace abov::io {

enum class DataSource { Ar1, MovingBar };

DataSource parse_data_source(std::string_view name);
std::string_view data_source_name(DataSource source);

struct RunConfig {
  DenoiserConfig model;

  // generation
  int substeps = 4;  // n
  int frames = 16;   // K
  std::uint64_t seed = 42;
  double append_noise_scale = 1.0;

  // diffusion
  int max_timestep = 1000;
  double beta_start = 1e-4;
  double beta_end = 0.02;

  // training
  int steps = 500;
  int batch = 1;
  ScheduleKind schedule = ScheduleKind::DisturbanceAugmented;
  AdamConfig adam;

  // synthetic data
  DataSource data = DataSource::Ar1;
  double rho = 0.9;
  int bar_width = 3;
  int bar_velocity = 1;
  int video_length = 256;

  void set(std::string_view key, std::string_view value);
  static const std::vector<std::string>& keys();
  std::string to_text() const;
  // ConfigError naming the offending field.
  void validate() const;

  GenerationConfig generation() const;
  TrainOptions train_options() const;
  VarianceSchedule variance_schedule() const;
  Frames dataset(const Rng& rng) const;
};

RunConfig parse_config(std::string_view text);
// Missing or unreadable files are reported as ConfigError.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace abov::io
