#include "abov/io/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include "abov/errors.hpp"
#include "abov/stream.hpp"
#include "abov/synthetic.hpp"

namespace abov::io {

DenoiserConfig attention_bench_config() {
  DenoiserConfig c;
  c.frame_h = 4;
  c.frame_w = 4;
  c.channels = 1;
  c.patch_h = 2;
  c.patch_w = 2;
  c.hidden = 64;
  c.heads = 64;
  c.depth = 2;
  return c;
}

int bench_threads_from_env() {
  const char* env = std::getenv("BOV_THREADS");
  if (env == nullptr) return 1;
  try {
    const int n = std::stoi(env);
    return n > 0 ? n : 1;
  } catch (const std::exception&) {
    return 1;
  }
}

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

struct RepeatResult {
  double seconds_per_frame = 0.0;
  double evals_per_frame = 0.0;
};

RepeatResult time_repeat(const AdaBovDenoiser<float>& model, const BenchOptions& options, int window, int substeps,
                         const VarianceSchedule& schedule, const Rng& rng) {
  GenerationConfig gen;
  gen.window = window;
  gen.substeps = substeps;
  gen.frames = options.frames;
  gen.seed = options.seed;

  Rng data_rng = rng.split("data");
  const Frames initial = gen_ar1_video({0.0, model.config().frame_shape()}, window + 1, data_rng);
  StreamState state = init_stream(initial, gen, schedule, rng);
  ModelPredictor predictor(model);
  for (int i = 0; i < options.warmup; ++i) iterate(state, predictor);

  const std::int64_t evals_before = state.evaluations;
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < options.frames; ++i) iterate(state, predictor);
  const auto stop = std::chrono::steady_clock::now();

  RepeatResult r;
  r.seconds_per_frame = std::chrono::duration<double>(stop - start).count() / options.frames;
  r.evals_per_frame = static_cast<double>(state.evaluations - evals_before) / options.frames;
  return r;
}

}  // namespace

std::vector<BenchRow> run_bench(const BenchOptions& options, const VarianceSchedule& schedule) {
  if (options.frames < 1 || options.repeats < 1 || options.warmup < 0) {
    throw ConfigError("bench: frames and repeats must be >= 1, warmup >= 0");
  }
  if (options.windows.empty() || options.substeps.empty()) throw ConfigError("bench: empty L or n list");
  const Rng root(options.seed);

  std::vector<AdaBovDenoiser<float>> models;
  for (int window : options.windows) {
    DenoiserConfig mc = options.model;
    mc.window = window;
    models.emplace_back(mc, options.seed);
  }

  struct Case {
    std::size_t model;
    int window;
    int substeps;
  };
  std::vector<Case> cases;
  for (std::size_t w = 0; w < options.windows.size(); ++w) {
    for (int substeps : options.substeps) cases.push_back({w, options.windows[w], substeps});
  }

  // Repeat-major order spreads slow drift in machine speed over every case.
  const std::size_t tasks = cases.size() * static_cast<std::size_t>(options.repeats);
  std::vector<RepeatResult> results(tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const Case& c = cases[t % cases.size()];
      const auto repeat = static_cast<std::uint64_t>(t / cases.size());
      const Rng rng = root.split("bench").split(repeat);
      results[t] = time_repeat(models[c.model], options, c.window, c.substeps, schedule, rng);
    }
  };
  const int threads = std::clamp(options.threads, 1, static_cast<int>(tasks));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<BenchRow> rows;
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    BenchRow row;
    row.window = cases[ci].window;
    row.substeps = cases[ci].substeps;
    row.evals_per_frame = results[ci].evals_per_frame;
    for (int r = 0; r < options.repeats; ++r) {
      const RepeatResult& rr = results[static_cast<std::size_t>(r) * cases.size() + ci];
      if (rr.evals_per_frame != row.evals_per_frame) throw InternalError("bench: evaluation count varies by repeat");
      row.samples.push_back(rr.seconds_per_frame);
    }
    row.seconds_per_frame = median(row.samples);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace abov::io
