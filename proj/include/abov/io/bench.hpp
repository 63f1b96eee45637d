#pragma once

#include <cstdint>
#include <vector>

#include "abov/denoiser.hpp"
#include "abov/diffusion.hpp"

namespace abov::io {

// Four patches per frame and one channel per head, so per-frame cost is
// dominated by the temporal attention over the window.
DenoiserConfig attention_bench_config();

struct BenchOptions {
  DenoiserConfig model = attention_bench_config();  // window is overridden per case
  std::vector<int> windows{8, 16};
  std::vector<int> substeps{1, 4};
  int frames = 8;      // timed iterations per repeat
  int repeats = 5;
  int warmup = 1;      // untimed iterations before each repeat
  int threads = 1;     // repeats run concurrently on up to this many threads
  std::uint64_t seed = 42;
};

struct BenchRow {
  int window = 0;
  int substeps = 0;
  double seconds_per_frame = 0.0;  // median over repeats
  double evals_per_frame = 0.0;    // counted
  std::vector<double> samples;     // seconds per frame, one per repeat
};

std::vector<BenchRow> run_bench(const BenchOptions& options, const VarianceSchedule& schedule);

// BOV_THREADS when set to a positive integer, otherwise 1.
int bench_threads_from_env();

}  // namespace abov::io
