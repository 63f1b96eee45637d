#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdint>
#include <cmath>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "abov/rng.hpp"
#include "abov/tensor.hpp"

namespace abov::test {

template <typename Real = double>
Tensor<Real> random_tensor(const Shape& shape, Rng& rng, bool requires_grad = false, double scale = 1.0) {
  std::vector<Real> v(shape_numel(shape));
  for (auto& x : v) x = static_cast<Real>(scale * rng.normal());
  return Tensor<Real>::from(shape, std::move(v), requires_grad);
}

inline Shape random_shape(Rng& rng, std::size_t rank, std::size_t max_dim = 16) {
  Shape s(rank);
  for (auto& d : s) d = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_dim));
  return s;
}

// Central differences of a scalar function, written against raw storage so it
// shares nothing with the library's own checker.
inline std::vector<double> numeric_gradient(const std::function<double()>& f, Tensor<double>& x,
                                            double h = 1e-5) {
  std::vector<double> g(x.numel());
  auto data = x.mutable_data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double keep = data[i];
    data[i] = keep + h;
    const double up = f();
    data[i] = keep - h;
    const double down = f();
    data[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double max_relative_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

inline bool bitwise_equal(std::span<const float> a, std::span<const float> b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](float x, float y) {
           return std::bit_cast<std::uint32_t>(x) == std::bit_cast<std::uint32_t>(y);
         });
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("abov_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace abov::test
