#include "doctest.h"

#include <cmath>

#include "abov/denoiser.hpp"
#include "abov/errors.hpp"
#include "abov/ops.hpp"
#include "abov/optim.hpp"
#include "support.hpp"

using namespace abov;
using namespace abov::ops;
using abov::test::random_tensor;

namespace {

// Plain scalar Adam, used as the reference trajectory.
struct ScalarAdam {
  double lr, b1, b2, eps;
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double w, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    return w - lr * mh / (std::sqrt(vh) + eps);
  }
};

}  // namespace

TEST_CASE("adam with zero gradient leaves parameters unchanged") {
  auto w = Tensor<double>::from({3}, {1.0, -2.0, 0.5}, true);
  w.mutable_grad();
  AdamState<double> state;
  Tensor<double>* params[] = {&w};
  adam_step<double>(params, state);
  CHECK(w[0] == 1.0);
  CHECK(w[1] == -2.0);
  CHECK(w[2] == 0.5);
  CHECK(state.step_count == 1);
  REQUIRE(state.m.size() == 1);
  CHECK(state.m[0].size() == 3);
}

TEST_CASE("adam first step moves by the learning rate") {
  auto w = Tensor<double>::from({1}, {2.0}, true);
  w.mutable_grad()[0] = 1.0;
  AdamState<double> state;
  state.config.lr = 0.1;
  Tensor<double>* params[] = {&w};
  adam_step<double>(params, state);
  CHECK(w[0] == doctest::Approx(1.9).epsilon(1e-6));
}

TEST_CASE("adam minimizes a square like the scalar reference") {
  auto w = Tensor<double>::from({1}, {1.0}, true);
  AdamState<double> state;
  state.config.lr = 0.1;
  ScalarAdam ref{0.1, 0.9, 0.999, 1e-8};
  double w_ref = 1.0;
  Tensor<double>* params[] = {&w};
  for (int i = 0; i < 100; ++i) {
    w.zero_grad();
    sum_all(mul(w, w)).backward();
    adam_step<double>(params, state);
    w_ref = ref.step(w_ref, 2.0 * w_ref);
    CHECK(w[0] == doctest::Approx(w_ref).epsilon(1e-12));
  }
  CHECK(std::abs(w[0]) < 0.5);
  CHECK(state.step_count == 100);
}

TEST_CASE("adam errors") {
  auto w = Tensor<double>::from({1}, {1.0}, true);
  auto u = Tensor<double>::from({2}, {1.0, 2.0}, true);
  AdamState<double> state;
  Tensor<double>* one[] = {&w};
  Tensor<double>* other[] = {&u};
  adam_step<double>(one, state);
  CHECK_THROWS_AS(adam_step<double>(other, state), ShapeError);
  AdamState<double> zero_lr;
  zero_lr.config.lr = 0.0;
  CHECK_THROWS_AS(adam_step<double>(one, zero_lr), ConfigError);
}

TEST_CASE("grad_check on a linear layer") {
  Rng rng(5);
  auto x = random_tensor({3, 4}, rng);
  auto weight = random_tensor({4, 5}, rng, true);
  auto bias = random_tensor({5}, rng, true);
  auto probe = random_tensor({3, 5}, rng);
  Linear<double> layer{weight, bias};
  auto loss = [&] { return sum_all(mul(layer(x), probe)); };
  Tensor<double>* inputs[] = {&layer.weight, &layer.bias};
  auto report = grad_check(loss, inputs);
  CHECK(report.checked == 25);
  CHECK(report.max_rel_error < 1e-8);
  CHECK(report.passed);
}

TEST_CASE("grad_check on a constant closure is exact") {
  auto x = Tensor<double>::from({2}, {1.0, 2.0}, true);
  auto c = Tensor<double>::from({2}, {3.0, 4.0});
  auto loss = [&] { return sum_all(mul(c, c)); };
  Tensor<double>* inputs[] = {&x};
  auto report = grad_check(loss, inputs);
  CHECK(report.max_rel_error == 0.0);
  CHECK(report.max_abs_error == 0.0);
  CHECK(report.passed);
}

TEST_CASE("grad_check flags a wrong gradient") {
  // Detaching inside the closure hides the dependence from the tape.
  auto x = Tensor<double>::from({2}, {1.0, 2.0}, true);
  auto loss = [&] { return sum_all(mul(x.detach(), x)); };
  Tensor<double>* inputs[] = {&x};
  auto report = grad_check(loss, inputs);
  CHECK_FALSE(report.passed);
  CHECK(report.max_rel_error > 0.1);
}

TEST_CASE("grad_check through a modulated prefix attention block") {
  DenoiserConfig cfg;
  cfg.frame_h = cfg.frame_w = 4;
  cfg.hidden = 8;
  cfg.heads = 2;
  cfg.depth = 1;
  cfg.window = 3;
  AdaBovDenoiser<double> model(cfg, 9);
  model.perturb(0.2, 10);
  auto& block = model.blocks()[0];
  Rng rng(6);
  auto ref_feat = random_tensor({8}, rng, true);
  auto tokens = random_tensor({4, 3, 8}, rng);
  auto probe = random_tensor({4, 3, 8}, rng);
  // Key biases get an exactly zero gradient (softmax is shift invariant), so
  // the closure is a mean to keep difference roundoff below the error floor.
  auto loss = [&] {
    auto b_tilde = modulate_bov(block.bov, ref_feat);
    return mean_all(mul(attention_block(tokens, block.temporal, cfg.heads, b_tilde), probe));
  };
  std::vector<Tensor<double>*> inputs = {&ref_feat,
                                         &block.bov.token,
                                         &block.bov.mlp_hidden.weight,
                                         &block.bov.mlp_hidden.bias,
                                         &block.bov.mlp_out.weight,
                                         &block.bov.mlp_out.bias,
                                         &block.temporal.norm.gamma,
                                         &block.temporal.norm.beta,
                                         &block.temporal.qkv.weight,
                                         &block.temporal.qkv.bias,
                                         &block.temporal.out.weight,
                                         &block.temporal.out.bias};
  for (auto* t : inputs) t->set_requires_grad(true);
  auto report = grad_check(loss, inputs);
  CAPTURE(report.worst);
  CAPTURE(report.max_abs_error);
  CHECK(report.max_rel_error < 1e-4);
  CHECK(report.passed);
}
