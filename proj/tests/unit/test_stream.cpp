#include "doctest.h"

#include <map>

#include "abov/errors.hpp"
#include "abov/stream.hpp"
#include "abov/synthetic.hpp"
#include "support.hpp"

using namespace abov;
using abov::test::bitwise_equal;

namespace {

Frames gaussian_frames(int count, Rng rng) {
  Ar1Params p;
  p.rho = 0.0;
  p.frame_shape = {1, 4, 4};
  return gen_ar1_video(p, count, rng);
}

GenerationConfig gen(int l, int n) {
  GenerationConfig g;
  g.window = l;
  g.substeps = n;
  return g;
}

class CountingZero final : public EpsPredictor {
 public:
  int calls = 0;
  Tensor<float> predict(const Tensor<float>& window, std::span<const NoiseLevel> levels, const Frame&) override {
    ++calls;
    CHECK(levels.size() == window.dim(0));
    return Tensor<float>::zeros(window.shape());
  }
};

}  // namespace

TEST_CASE("initial window sits on the coarse grid") {
  auto schedule = build_schedule(1000, 1e-4, 0.02);
  auto frames = gaussian_frames(5, Rng(1));
  auto state = init_stream(frames, gen(4, 2), schedule, Rng(2));
  CHECK(state.window.levels == std::vector<double>{250, 500, 750, 1000});
  CHECK(state.window.indices == std::vector<std::int64_t>{1, 2, 3, 4});
  CHECK(state.reference.frame_index == 0);
  CHECK(bitwise_equal(state.reference.values.data(), frames[0].data()));
  CHECK(state.iteration == 1);
  CHECK(state.substep == 0);

  auto again = init_stream(frames, gen(4, 2), schedule, Rng(2));
  for (std::size_t m = 0; m < 4; ++m) CHECK(bitwise_equal(state.window.frames[m].data(), again.window.frames[m].data()));
  auto other = init_stream(frames, gen(4, 2), schedule, Rng(3));
  CHECK_FALSE(bitwise_equal(state.window.frames[0].data(), other.window.frames[0].data()));
}

TEST_CASE("init errors") {
  auto schedule = build_schedule(1000, 1e-4, 0.02);
  auto frames = gaussian_frames(4, Rng(1));
  CHECK_THROWS_AS(init_stream(frames, gen(4, 1), schedule, Rng(2)), ConfigError);
  CHECK_THROWS_AS(init_stream(frames, gen(3, 0), schedule, Rng(2)), ConfigError);
  CHECK_THROWS_AS(init_stream(frames, gen(0, 1), schedule, Rng(2)), ConfigError);
  Frames mixed = frames;
  mixed.push_back(Frame::zeros({1, 2, 2}));
  CHECK_THROWS_AS(init_stream(mixed, gen(4, 1), schedule, Rng(2)), ConfigError);
}

TEST_CASE("one substep per iteration lowers every level by a window step") {
  auto schedule = build_schedule(1000, 1e-4, 0.02);
  auto state = init_stream(gaussian_frames(5, Rng(1)), gen(4, 1), schedule, Rng(2));
  CountingZero zero;
  substep(state, zero);
  CHECK(state.window.levels == std::vector<double>{0, 250, 500, 750});
  CHECK_THROWS_AS(substep(state, zero), InternalError);
}

TEST_CASE("n substeps bring slot m to m window steps") {
  auto schedule = build_schedule(1000, 1e-4, 0.02);
  for (int n : {1, 2, 3, 4, 8}) {
    CAPTURE(n);
    auto state = init_stream(gaussian_frames(6, Rng(1)), gen(5, n), schedule, Rng(2));
    OraclePredictor oracle(schedule);
    std::vector<double> previous = state.window.levels;
    for (int s = 0; s < n; ++s) {
      substep(state, oracle);
      for (std::size_t m = 0; m < 5; ++m) {
        CHECK(state.window.levels[m] == grid_level(1000, 5, n, static_cast<int>(m + 1) * n - s - 1));
        CHECK(previous[m] - state.window.levels[m] == doctest::Approx(1000.0 / (5 * n)).epsilon(1e-12));
        if (m > 0) CHECK(state.window.levels[m] > state.window.levels[m - 1]);
      }
      previous = state.window.levels;
    }
    CHECK(state.window.levels[0] == 0.0);
    for (std::size_t m = 0; m < 5; ++m) CHECK(state.window.levels[m] == 200.0 * static_cast<double>(m));
  }
}

TEST_CASE("oracle substep scales each slot by the closed-form gain") {
  auto schedule = build_schedule(1000, 1e-4, 0.02);
  auto state = init_stream(gaussian_frames(5, Rng(4)), gen(4, 3), schedule, Rng(5));
  OraclePredictor oracle(schedule);
  for (int s = 0; s < 3; ++s) {
    const auto before = state.window;
    substep(state, oracle);
    for (std::size_t m = 0; m < 4; ++m) {
      const double c = ddim_oracle_gain(schedule, state.window.levels[m], before.levels[m]);
      for (std::size_t i = 0; i < before.frames[m].numel(); ++i) {
        CHECK(state.window.frames[m][i] == doctest::Approx(c * before.frames[m][i]).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("iterate restores the grid and hands over the reference") {
  auto schedule = build_schedule(1000, 1e-4, 0.02);
  auto state = init_stream(gaussian_frames(5, Rng(1)), gen(4, 3), schedule, Rng(2));
  const auto grid = state.window.levels;
  OraclePredictor oracle(schedule);
  for (std::int64_t k = 1; k <= 6; ++k) {
    const auto evals = state.evaluations;
    auto frame = iterate(state, oracle);
    CHECK(state.evaluations - evals == 3);
    CHECK(frame.frame_index == k);
    CHECK(state.reference.frame_index == k);
    CHECK(bitwise_equal(state.reference.values.data(), frame.values.data()));
    CHECK(state.window.levels == grid);
    CHECK(state.window.indices.front() == k + 1);
    CHECK(state.window.indices.back() == k + 4);
    CHECK(state.iteration == k + 1);
  }
}

TEST_CASE("every frame follows the fine grid from T to 0") {
  auto schedule = build_schedule(1000, 1e-4, 0.02);
  for (int l : {1, 3, 4}) {
    for (int n : {1, 2, 4}) {
      CAPTURE(l);
      CAPTURE(n);
      auto state = init_stream(gaussian_frames(l + 1, Rng(1)), gen(l, n), schedule, Rng(2));
      std::map<std::int64_t, std::vector<double>> trajectory;
      for (std::size_t m = 0; m < state.window.indices.size(); ++m) {
        trajectory[state.window.indices[m]].push_back(state.window.levels[m]);
      }
      std::map<std::int64_t, std::int64_t> updates;
      state.on_substep = [&](const StreamState& s) {
        for (std::size_t m = 0; m < s.window.indices.size(); ++m) {
          trajectory[s.window.indices[m]].push_back(s.window.levels[m]);
          updates[s.window.indices[m]] += 1;
        }
      };
      OraclePredictor oracle(schedule);
      const int k = 3 * l + 2;
      run(state, oracle, k);
      CHECK(state.evaluations == static_cast<std::int64_t>(n) * k);

      auto fine = sampling_grid(1000, l, n);
      std::vector<double> full(fine.rbegin(), fine.rend());
      // Frames appended after the start enter at T and live through n * L updates.
      for (std::int64_t idx = l + 1; idx <= k; ++idx) {
        CAPTURE(idx);
        // Appended at the end of iteration idx - l, at level T.
        CHECK(updates[idx] == static_cast<std::int64_t>(n) * l);
        auto seen = trajectory[idx];
        seen.insert(seen.begin(), 1000.0);
        CHECK(seen == full);
      }
    }
  }
}

TEST_CASE("run emits frames in order with n evaluations each") {
  auto schedule = build_schedule(1000, 1e-4, 0.02);
  auto state = init_stream(gaussian_frames(9, Rng(1)), gen(8, 4), schedule, Rng(2));
  CountingZero zero;
  auto frames = run(state, zero, 3);
  REQUIRE(frames.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(frames[static_cast<std::size_t>(i)].frame_index == i + 1);
  CHECK(zero.calls == 12);
  CHECK(state.evaluations == 12);
  CHECK(state.emitted == 3);
  CHECK_THROWS_AS(run(state, zero, 0), ConfigError);

  auto oracle_state = init_stream(gaussian_frames(9, Rng(1)), gen(8, 4), schedule, Rng(2));
  OraclePredictor oracle(schedule);
  CHECK(run(oracle_state, oracle, 16).size() == 16);
}

TEST_CASE("iterate must start at a boundary") {
  auto schedule = build_schedule(1000, 1e-4, 0.02);
  auto state = init_stream(gaussian_frames(3, Rng(1)), gen(2, 2), schedule, Rng(2));
  CountingZero zero;
  substep(state, zero);
  CHECK_THROWS_AS(iterate(state, zero), InternalError);
}

TEST_CASE("sampling is deterministic") {
  auto schedule = build_schedule(1000, 1e-4, 0.02);
  DenoiserConfig cfg;
  cfg.frame_h = cfg.frame_w = 4;
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.depth = 1;
  cfg.window = 3;
  AdaBovDenoiser<float> model(cfg, 4);
  model.perturb(0.1, 5);
  auto make = [&] {
    auto state = init_stream(gaussian_frames(4, Rng(1)), gen(3, 2), schedule, Rng(7));
    ModelPredictor predictor(model);
    return run(state, predictor, 5);
  };
  auto a = make();
  auto b = make();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(bitwise_equal(a[i].values.data(), b[i].values.data()));
}

TEST_CASE("oracle output is linear in the appended noise") {
  auto schedule = build_schedule(1000, 1e-4, 0.02);
  const int l = 4, k = 10;
  auto frames = gaussian_frames(l + 1, Rng(1));
  auto base_cfg = gen(l, 2);
  auto scaled_cfg = base_cfg;
  scaled_cfg.append_noise_scale = 2.0;
  OraclePredictor oracle(schedule);
  auto s1 = init_stream(frames, base_cfg, schedule, Rng(9));
  auto s2 = init_stream(frames, scaled_cfg, schedule, Rng(9));
  auto a = run(s1, oracle, k);
  auto b = run(s2, oracle, k);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CAPTURE(i);
    for (std::size_t p = 0; p < a[i].values.numel(); ++p) {
      // The first L frames come from the conditioning, the rest from appended noise.
      const float expect = a[i].frame_index > l ? 2.0f * a[i].values[p] : a[i].values[p];
      CHECK(b[i].values[p] == expect);
    }
  }
}

TEST_CASE("self start replicates the seed frame") {
  auto schedule = build_schedule(1000, 1e-4, 0.02);
  auto seed = gaussian_frames(1, Rng(3))[0];
  auto state = init_stream_self_start(seed, gen(3, 1), schedule, Rng(4));
  CHECK(bitwise_equal(state.reference.values.data(), seed.data()));
  CHECK(state.window.frames.size() == 3);
}

TEST_CASE("stack frames") {
  Frames f{Frame::full({1, 2, 2}, 1.0f), Frame::full({1, 2, 2}, 2.0f)};
  auto s = stack_frames(f);
  CHECK(s.shape() == Shape{2, 1, 2, 2});
  CHECK(s[4] == 2.0f);
  f.push_back(Frame::zeros({1, 3, 2}));
  CHECK_THROWS_AS(stack_frames(f), ShapeError);
}
