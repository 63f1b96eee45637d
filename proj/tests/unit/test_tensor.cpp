#include "doctest.h"

#include <cmath>
#include <numeric>

#include "abov/errors.hpp"
#include "abov/ops.hpp"
#include "support.hpp"

using namespace abov;
using namespace abov::ops;
using abov::test::max_relative_error;
using abov::test::numeric_gradient;
using abov::test::random_shape;
using abov::test::random_tensor;

namespace {

using T = Tensor<double>;

std::vector<double> grad_or_zero(const T& x) {
  if (!x.has_grad()) return std::vector<double>(x.numel(), 0.0);
  return {x.grad().begin(), x.grad().end()};
}

// loss = sum(op(inputs) * w) with a fixed random w. Checks every input against
// central differences.
void check_op(const std::string& label, std::vector<T> inputs, const std::function<T(const std::vector<T>&)>& op,
              Rng& rng) {
  CAPTURE(label);
  T w;
  {
    NoGradGuard ng;
    w = random_tensor(op(inputs).shape(), rng);
  }
  auto forward_value = [&] {
    NoGradGuard ng;
    return sum_all(mul(op(inputs), w)).item();
  };
  for (auto& x : inputs) x.set_requires_grad(true);
  sum_all(mul(op(inputs), w)).backward();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    CAPTURE(i);
    const auto analytic = grad_or_zero(inputs[i]);
    const auto numeric = numeric_gradient(forward_value, inputs[i]);
    CHECK(max_relative_error(analytic, numeric, 1e-4) < 1e-4);
  }
}

}  // namespace

TEST_CASE("elementwise add") {
  auto out = add(Tensor<float>::from({2}, {1, 2}), Tensor<float>::from({2}, {3, 4}));
  CHECK(out[0] == 4.0f);
  CHECK(out[1] == 6.0f);
}

TEST_CASE("softmax of equal logits is uniform") {
  auto out = softmax_lastdim(T::from({3}, {0, 0, 0}));
  for (int i = 0; i < 3; ++i) CHECK(out[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("identity matmul returns the right operand") {
  Rng rng(3);
  for (std::size_t k : {1u, 4u, 7u}) {
    auto x = random_tensor({3, k}, rng);
    auto eye = T::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    auto y = matmul(eye, x);
    REQUIRE(y.shape() == x.shape());
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(y[i] == x[i]);
  }
}

TEST_CASE("shape validation") {
  CHECK_THROWS_AS(T::from({2, 2}, {1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(T::zeros({2, 0}), ShapeError);
  CHECK_THROWS_AS(add(T::zeros({2}), T::zeros({3})), ShapeError);
  CHECK_THROWS_AS(matmul(T::zeros({2, 3}), T::zeros({2, 3})), ShapeError);
  CHECK_THROWS_AS(reshape(T::zeros({2, 3}), {4}), ShapeError);
  CHECK_THROWS_AS(permute(T::zeros({2, 3}), {0, 0}), ShapeError);
  CHECK_THROWS_AS(slice_axis(T::zeros({2, 3}), 1, 2, 5), ShapeError);
  CHECK_THROWS_AS(broadcast_to(T::zeros({2}), {3}), ShapeError);
}

TEST_CASE("non-finite results raise") {
  auto big = Tensor<float>::full({4}, 3e38f);
  CHECK_THROWS_AS(add(big, big), NumericsError);
  CHECK_THROWS_AS(scale(big, 10.0f), NumericsError);
  CHECK_THROWS_AS(T::from({1}, {std::nan("")}), NumericsError);
}

TEST_CASE("sum of squares gradient") {
  auto x = T::from({3}, {1, 2, 3}, true);
  sum_all(mul(x, x)).backward();
  REQUIRE(x.has_grad());
  CHECK(x.grad()[0] == 2.0);
  CHECK(x.grad()[1] == 4.0);
  CHECK(x.grad()[2] == 6.0);
}

TEST_CASE("loss independent of the input gives zero gradient") {
  auto x = T::from({3}, {1, 2, 3}, true);
  auto c = T::from({3}, {4, 5, 6}, true);
  sum_all(mul(c, c)).backward();
  for (double g : grad_or_zero(x)) CHECK(g == 0.0);
}

TEST_CASE("backward on a non-scalar raises") {
  auto x = T::from({3}, {1, 2, 3}, true);
  CHECK_THROWS_AS(mul(x, x).backward(), ShapeError);
}

TEST_CASE("shared subexpressions accumulate") {
  // z = y + x*y with y = x*x, loss = sum(z) + sum(y) = sum(x^3 + 2x^2)
  auto x = T::from({3}, {1, 2, 3}, true);
  auto y = mul(x, x);
  auto z = add(y, mul(x, y));
  add(sum_all(z), sum_all(y)).backward();
  const double expected[] = {3 + 4, 12 + 8, 27 + 12};
  for (int i = 0; i < 3; ++i) CHECK(x.grad()[i] == doctest::Approx(expected[i]).epsilon(1e-14));
}

TEST_CASE("leaf gradients accumulate across sweeps and interior ones reset") {
  auto x = T::from({2}, {1, -1}, true);
  auto loss = sum_all(scale(x, 3.0));
  loss.backward();
  loss.backward();
  CHECK(x.grad()[0] == 6.0);
  x.zero_grad();
  CHECK_FALSE(x.has_grad());
}

TEST_CASE("no-grad guard skips recording") {
  auto x = T::from({2}, {1, 2}, true);
  {
    NoGradGuard ng;
    auto y = mul(x, x);
    CHECK_FALSE(y.requires_grad());
    CHECK(y.is_leaf());
  }
  CHECK(NoGradGuard::grad_enabled());
  CHECK(mul(x, x).requires_grad());
}

TEST_CASE("every op matches central differences") {
  Rng rng(20240501);
  for (int trial = 0; trial < 3; ++trial) {
    CAPTURE(trial);
    const Shape s2 = random_shape(rng, 2);
    const Shape s3 = random_shape(rng, 3, 8);

    check_op("add", {random_tensor(s2, rng), random_tensor(s2, rng)},
             [](const auto& in) { return add(in[0], in[1]); }, rng);
    check_op("sub", {random_tensor(s2, rng), random_tensor(s2, rng)},
             [](const auto& in) { return sub(in[0], in[1]); }, rng);
    check_op("mul", {random_tensor(s2, rng), random_tensor(s2, rng)},
             [](const auto& in) { return mul(in[0], in[1]); }, rng);
    check_op("add broadcast", {random_tensor(s3, rng), random_tensor({s3[2]}, rng)},
             [](const auto& in) { return add(in[0], broadcast_to(in[1], in[0].shape())); }, rng);
    check_op("mul broadcast", {random_tensor(s3, rng), random_tensor({s3[0], 1, s3[2]}, rng)},
             [](const auto& in) { return mul(in[0], broadcast_to(in[1], in[0].shape())); }, rng);
    check_op("scale", {random_tensor(s2, rng)}, [](const auto& in) { return scale(in[0], -1.7); }, rng);
    check_op("add_scalar", {random_tensor(s2, rng)}, [](const auto& in) { return add_scalar(in[0], 0.3); }, rng);

    const std::size_t m = s3[0], k = s3[1], n = s3[2];
    check_op("matmul", {random_tensor({m, k}, rng), random_tensor({k, n}, rng)},
             [](const auto& in) { return matmul(in[0], in[1]); }, rng);
    check_op("matmul shared rhs", {random_tensor({3, m, k}, rng), random_tensor({k, n}, rng)},
             [](const auto& in) { return matmul(in[0], in[1]); }, rng);
    check_op("matmul batched", {random_tensor({2, m, k}, rng), random_tensor({2, k, n}, rng)},
             [](const auto& in) { return matmul(in[0], in[1]); }, rng);
    check_op("matmul transposed", {random_tensor({2, m, k}, rng), random_tensor({2, n, k}, rng)},
             [](const auto& in) { return matmul(in[0], in[1], true); }, rng);

    check_op("softmax", {random_tensor(s3, rng)}, [](const auto& in) { return softmax_lastdim(in[0]); }, rng);
    check_op("layer_norm",
             {random_tensor(s3, rng), random_tensor({s3[2]}, rng), random_tensor({s3[2]}, rng)},
             [](const auto& in) { return layer_norm_affine(in[0], in[1], in[2]); }, rng);
    check_op("gelu", {random_tensor(s2, rng)}, [](const auto& in) { return gelu(in[0]); }, rng);
    check_op("mean_over_axes", {random_tensor(s3, rng)},
             [](const auto& in) { return mean_over_axes(in[0], {0, 2}); }, rng);
    check_op("mean_over_axes keepdim", {random_tensor(s3, rng)},
             [](const auto& in) { return mean_over_axes(in[0], {1}, true); }, rng);
    check_op("sum_all", {random_tensor(s2, rng)}, [](const auto& in) { return sum_all(in[0]); }, rng);
    check_op("mean_all", {random_tensor(s2, rng)}, [](const auto& in) { return mean_all(in[0]); }, rng);
    check_op("concat",
             {random_tensor({s3[0], 2, s3[2]}, rng), random_tensor({s3[0], s3[1], s3[2]}, rng)},
             [](const auto& in) { return concat_axis(std::span<const T>(in), 1); }, rng);
    check_op("slice", {random_tensor(s3, rng)},
             [&](const auto& in) { return slice_axis(in[0], 2, s3[2] / 2, s3[2]); }, rng);
    check_op("broadcast_to", {random_tensor({1, s3[2]}, rng)},
             [&](const auto& in) { return broadcast_to(in[0], s3); }, rng);
    check_op("reshape", {random_tensor(s3, rng)},
             [&](const auto& in) { return reshape(in[0], {s3[0] * s3[1], s3[2]}); }, rng);
    check_op("permute", {random_tensor(s3, rng)},
             [](const auto& in) { return permute(in[0], {2, 0, 1}); }, rng);
  }
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = random_tensor<float>(random_shape(rng, 3), rng, false, 4.0);
    auto p = softmax_lastdim(x);
    const std::size_t d = x.shape().back();
    for (std::size_t r = 0; r < p.numel() / d; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += p[r * d + j];
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("layer norm rows are standardized") {
  Rng rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    Shape s = random_shape(rng, 2);
    s[1] = 8 + s[1] % 9;
    auto x = add_scalar(random_tensor(s, rng, false, 3.0), 5.0);
    auto y = layer_norm_affine(x, T{}, T{});
    for (std::size_t r = 0; r < s[0]; ++r) {
      double mean = 0.0, var = 0.0;
      for (std::size_t j = 0; j < s[1]; ++j) mean += y[r * s[1] + j];
      mean /= static_cast<double>(s[1]);
      for (std::size_t j = 0; j < s[1]; ++j) var += (y[r * s[1] + j] - mean) * (y[r * s[1] + j] - mean);
      var /= static_cast<double>(s[1]);
      CHECK(std::abs(mean) < 1e-6);
      CHECK(std::abs(var - 1.0) < 1e-5);
    }
  }
}

TEST_CASE("permute and reshape move values") {
  auto x = T::from({2, 3}, {0, 1, 2, 3, 4, 5});
  auto p = permute(x, {1, 0});
  CHECK(p.shape() == Shape{3, 2});
  const double expected[] = {0, 3, 1, 4, 2, 5};
  for (int i = 0; i < 6; ++i) CHECK(p[i] == expected[i]);
  auto s = slice_axis(x, 1, 1, 3);
  CHECK(s.shape() == Shape{2, 2});
  CHECK(s[0] == 1);
  CHECK(s[3] == 5);
}

TEST_CASE("sinusoidal features") {
  const double levels[] = {0.0, 250.0};
  auto e = sinusoidal_embed<double>(levels, 4);
  REQUIRE(e.shape() == Shape{2, 4});
  CHECK(e[0] == 1.0);
  CHECK(e[2] == 0.0);
  CHECK(e[4] == doctest::Approx(std::cos(250.0)));
  CHECK(e[5] == doctest::Approx(std::cos(250.0 * 0.01)));
  CHECK(e[7] == doctest::Approx(std::sin(250.0 * 0.01)));
}

TEST_CASE("detach and clone copy storage") {
  auto x = T::from({2}, {1, 2}, true);
  auto d = x.detach();
  CHECK_FALSE(d.requires_grad());
  CHECK_FALSE(d.same_storage(x));
  auto c = x.clone();
  CHECK(c.requires_grad());
  c.mutable_data()[0] = 9;
  CHECK(x[0] == 1);
}
