#include "doctest.h"

#include <map>

#include "abov/denoiser.hpp"
#include "abov/errors.hpp"
#include "abov/ops.hpp"
#include "reference_forward.hpp"
#include "support.hpp"

using namespace abov;
using namespace abov::ops;
using abov::test::bitwise_equal;
using abov::test::max_relative_error;
using abov::test::numeric_gradient;
using abov::test::random_tensor;
using abov::test::reference_forward;
using Prefix = abov::test::Prefix;

namespace {

DenoiserConfig small_config() {
  DenoiserConfig cfg;
  cfg.frame_h = 4;
  cfg.frame_w = 6;
  cfg.channels = 2;
  cfg.patch_h = 2;
  cfg.patch_w = 2;
  cfg.hidden = 16;
  cfg.depth = 2;
  cfg.heads = 4;
  cfg.window = 3;
  return cfg;
}

void zero_modulation(AdaBovDenoiser<float>& model) {
  for (auto& b : model.blocks()) {
    for (auto& v : b.bov.mlp_out.weight.mutable_data()) v = 0.0f;
    for (auto& v : b.bov.mlp_out.bias.mutable_data()) v = 0.0f;
  }
}

std::vector<double> grid_levels(int l) {
  std::vector<double> v;
  for (int m = 1; m <= l; ++m) v.push_back(1000.0 * m / l);
  return v;
}

}  // namespace

TEST_CASE("output has the window shape") {
  Rng rng(1);
  for (auto [h, w, c, p, l] : {std::tuple{4, 4, 1, 2, 1}, {4, 6, 2, 2, 3}, {8, 8, 3, 4, 5}, {6, 6, 1, 3, 2}}) {
    DenoiserConfig cfg;
    cfg.frame_h = h;
    cfg.frame_w = w;
    cfg.channels = c;
    cfg.patch_h = cfg.patch_w = p;
    cfg.hidden = 8;
    cfg.heads = 2;
    cfg.depth = 1;
    cfg.window = l;
    AdaBovDenoiser<float> model(cfg, 3);
    model.perturb(0.05, 4);
    auto window = random_tensor<float>(cfg.window_shape(), rng);
    auto out = model.forward(window, grid_levels(l), random_tensor<float>(cfg.frame_shape(), rng));
    CHECK(out.shape() == window.shape());
  }
}

TEST_CASE("zero output projection predicts zero") {
  auto cfg = small_config();
  AdaBovDenoiser<float> model(cfg, 5);
  Rng rng(2);
  auto out = model.forward(random_tensor<float>(cfg.window_shape(), rng), grid_levels(cfg.window),
                           random_tensor<float>(cfg.frame_shape(), rng));
  for (float v : out.data()) CHECK(v == 0.0f);
}

TEST_CASE("reference forward reproduces the model without modulation") {
  auto cfg = small_config();
  AdaBovDenoiser<float> model(cfg, 6);
  model.perturb(0.1, 7);
  zero_modulation(model);
  Rng rng(3);
  auto window = random_tensor<float>(cfg.window_shape(), rng);
  const auto levels = grid_levels(cfg.window);
  auto ref_a = random_tensor<float>(cfg.frame_shape(), rng);
  auto ref_b = random_tensor<float>(cfg.frame_shape(), rng, false, 5.0);

  auto expected = reference_forward(model, window, levels, Prefix::RawToken);
  auto got_a = model.forward(window, levels, ref_a);
  auto got_b = model.forward(window, levels, ref_b);
  CHECK(bitwise_equal(got_a.data(), expected.data()));
  CHECK(bitwise_equal(got_b.data(), expected.data()));
  bool nonzero = false;
  for (float v : expected.data()) nonzero = nonzero || v != 0.0f;
  CHECK(nonzero);
}

TEST_CASE("fresh model modulates to the raw token") {
  auto cfg = small_config();
  AdaBovDenoiser<float> model(cfg, 8);
  Rng rng(4);
  auto feat = model.embed_reference(random_tensor<float>(cfg.frame_shape(), rng));
  for (std::size_t j = 0; j < model.blocks().size(); ++j) {
    auto b = model.modulated_token(j, feat);
    CHECK(bitwise_equal(b.data(), model.blocks()[j].bov.token.data()));
  }
}

TEST_CASE("disabled bov ignores the reference") {
  auto cfg = small_config();
  cfg.bov_enabled = false;
  AdaBovDenoiser<float> model(cfg, 9);
  model.perturb(0.1, 10);
  Rng rng(5);
  auto window = random_tensor<float>(cfg.window_shape(), rng);
  const auto levels = grid_levels(cfg.window);
  auto a = model.forward(window, levels, random_tensor<float>(cfg.frame_shape(), rng));
  auto b = model.forward(window, levels, random_tensor<float>(cfg.frame_shape(), rng, false, 3.0));
  auto plain = reference_forward(model, window, levels, Prefix::None);
  CHECK(bitwise_equal(a.data(), b.data()));
  CHECK(bitwise_equal(a.data(), plain.data()));
}

TEST_CASE("enabled bov responds to the reference once modulation is trained") {
  auto cfg = small_config();
  AdaBovDenoiser<float> model(cfg, 11);
  model.perturb(0.1, 12);
  Rng rng(6);
  auto window = random_tensor<float>(cfg.window_shape(), rng);
  const auto levels = grid_levels(cfg.window);
  auto a = model.forward(window, levels, random_tensor<float>(cfg.frame_shape(), rng));
  auto b = model.forward(window, levels, random_tensor<float>(cfg.frame_shape(), rng));
  CHECK_FALSE(bitwise_equal(a.data(), b.data()));
}

TEST_CASE("each frame sees its own noise level") {
  auto cfg = small_config();
  AdaBovDenoiser<float> model(cfg, 13);
  model.perturb(0.1, 14);
  Rng rng(7);
  auto window = random_tensor<float>(cfg.window_shape(), rng);
  auto reference = random_tensor<float>(cfg.frame_shape(), rng);
  const auto levels = grid_levels(cfg.window);
  auto base = model.forward(window, levels, reference);
  const std::size_t per = shape_numel(cfg.frame_shape());
  for (int k = 0; k < cfg.window; ++k) {
    CAPTURE(k);
    auto changed = levels;
    changed[static_cast<std::size_t>(k)] -= 40.0;
    auto out = model.forward(window, changed, reference);
    auto slice_a = base.data().subspan(static_cast<std::size_t>(k) * per, per);
    auto slice_b = out.data().subspan(static_cast<std::size_t>(k) * per, per);
    double diff = 0.0;
    for (std::size_t i = 0; i < per; ++i) diff = std::max(diff, double(std::abs(slice_a[i] - slice_b[i])));
    CHECK(diff > 1e-4);
  }
}

TEST_CASE("temporal attention sees L plus one tokens and returns L") {
  for (bool bov : {true, false}) {
    auto cfg = small_config();
    cfg.bov_enabled = bov;
    AdaBovDenoiser<float> model(cfg, 15);
    model.perturb(0.1, 16);
    Rng rng(8);
    AttentionTrace<float> trace;
    model.forward(random_tensor<float>(cfg.window_shape(), rng), grid_levels(cfg.window),
                  random_tensor<float>(cfg.frame_shape(), rng), &trace);
    REQUIRE(trace.tokens_in.size() == static_cast<std::size_t>(cfg.depth));
    const auto l = static_cast<std::size_t>(cfg.window);
    for (std::size_t j = 0; j < trace.tokens_in.size(); ++j) {
      CHECK(trace.tokens_in[j] == (bov ? l + 1 : l));
      CHECK(trace.tokens_out[j] == l);
      const auto& probs = trace.probabilities[j];
      const std::size_t d = probs.shape().back();
      CHECK(d == trace.tokens_in[j]);
      for (std::size_t r = 0; r < probs.numel() / d; ++r) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += probs[r * d + i];
        CHECK(std::abs(s - 1.0) < 1e-5);
      }
    }
  }
}

TEST_CASE("temporal attention keeps the sequence length") {
  auto cfg = small_config();
  AdaBovDenoiser<float> model(cfg, 17);
  Rng rng(9);
  auto tokens = random_tensor<float>({6, 3, 16}, rng);
  auto out = model.temporal_attention(0, tokens, model.blocks()[0].bov.token);
  CHECK(out.shape() == tokens.shape());
  CHECK_THROWS_AS(model.temporal_attention(0, tokens, random_tensor<float>({15}, rng)), ShapeError);
}

TEST_CASE("modulation scales and shifts the token") {
  BovBlock<double> block;
  block.token = Tensor<double>::from({2}, {1.0, 2.0});
  block.mlp_hidden = {Tensor<double>::zeros({2, 2}), Tensor<double>::zeros({2})};
  block.mlp_out = {Tensor<double>::zeros({2, 4}), Tensor<double>::from({4}, {1.0, 0.0, 0.5, -1.0})};
  auto out = modulate_bov(block, Tensor<double>::from({2}, {0.3, -0.7}));
  CHECK(out[0] == 2.5);
  CHECK(out[1] == 1.0);
}

TEST_CASE("modulation gradients match central differences") {
  Rng rng(10);
  BovBlock<double> block;
  block.token = random_tensor({5}, rng);
  block.mlp_hidden = {random_tensor({5, 5}, rng), random_tensor({5}, rng)};
  block.mlp_out = {random_tensor({5, 10}, rng, false, 0.3), random_tensor({10}, rng, false, 0.3)};
  auto feat = random_tensor({5}, rng);
  auto probe = random_tensor({5}, rng);
  std::vector<Tensor<double>*> inputs = {&block.token,        &block.mlp_hidden.weight, &block.mlp_hidden.bias,
                                         &block.mlp_out.weight, &block.mlp_out.bias,      &feat};
  for (auto* t : inputs) t->set_requires_grad(true);
  sum_all(mul(modulate_bov(block, feat), probe)).backward();
  auto value = [&] {
    NoGradGuard ng;
    return sum_all(mul(modulate_bov(block, feat), probe)).item();
  };
  for (auto* t : inputs) {
    REQUIRE(t->has_grad());
    std::vector<double> analytic(t->grad().begin(), t->grad().end());
    CHECK(max_relative_error(analytic, numeric_gradient(value, *t)) < 1e-4);
  }
}

TEST_CASE("reference embedding") {
  auto cfg = small_config();
  AdaBovDenoiser<float> model(cfg, 18);
  for (auto& np : model.named_parameters()) {
    if (np.name == "patch_embed.bias") {
      for (auto& v : np.tensor->mutable_data()) v = 0.0f;
    }
  }
  auto zero = model.embed_reference(Tensor<float>::zeros(cfg.frame_shape()));
  REQUIRE(zero.shape() == Shape{16});
  for (float v : zero.data()) CHECK(v == 0.0f);
  Rng rng(11);
  CHECK(model.embed_reference(random_tensor<float>(cfg.frame_shape(), rng)).numel() == 16);
  CHECK_THROWS_AS(model.embed_reference(Tensor<float>::zeros({2, 4, 4})), ShapeError);
}

TEST_CASE("forward rejects mismatched inputs") {
  auto cfg = small_config();
  AdaBovDenoiser<float> model(cfg, 19);
  auto ref = Tensor<float>::zeros(cfg.frame_shape());
  const auto levels = grid_levels(cfg.window);
  CHECK_THROWS_AS(model.forward(Tensor<float>::zeros({2, 2, 4, 6}), levels, ref), ShapeError);
  CHECK_THROWS_AS(model.forward(Tensor<float>::zeros(cfg.window_shape()), std::vector<double>{1.0}, ref),
                  ShapeError);
}

TEST_CASE("config validation") {
  auto bad = small_config();
  bad.frame_w = 5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = small_config();
  bad.heads = 3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = small_config();
  bad.depth = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(AdaBovDenoiser<float>(bad, 1), ConfigError);
}

TEST_CASE("cast and clone keep values") {
  auto cfg = small_config();
  AdaBovDenoiser<float> model(cfg, 20);
  model.perturb(0.1, 21);
  auto copy = model.clone();
  auto wide = model.cast<double>();
  auto a = model.named_parameters();
  auto b = copy.named_parameters();
  auto c = wide.named_parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].name == c[i].name);
    CHECK(bitwise_equal(a[i].tensor->data(), b[i].tensor->data()));
    CHECK_FALSE(a[i].tensor->same_storage(*b[i].tensor));
    for (std::size_t k = 0; k < a[i].tensor->numel(); ++k) CHECK(double((*a[i].tensor)[k]) == (*c[i].tensor)[k]);
  }
}
