#include "abov/io/metrics.hpp"

#include <cmath>

#include "abov/errors.hpp"

namespace abov::io {

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ShapeError("cosine_similarity: length mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

FrameStatistics frame_statistics(std::span<const Frame> frames) {
  if (frames.empty()) throw DataError("frame_statistics: no frames");
  const Shape& shape = frames.front().shape();
  for (const auto& f : frames) {
    if (f.shape() != shape) throw DataError("frame_statistics: frames have differing shapes");
  }

  FrameStatistics stats;
  stats.frames = frames.size();
  const double count = static_cast<double>(frames.size() * frames.front().numel());
  double sum = 0.0;
  for (const auto& f : frames) {
    for (float v : f.data()) sum += v;
  }
  stats.mean = sum / count;
  double sq = 0.0;
  for (const auto& f : frames) {
    for (float v : f.data()) sq += (v - stats.mean) * (v - stats.mean);
  }
  stats.variance = sq / count;

  if (frames.size() > 1) {
    double cos_sum = 0.0, diff_sum = 0.0;
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
      const auto a = frames[i].data();
      const auto b = frames[i + 1].data();
      cos_sum += cosine_similarity(a, b);
      double d = 0.0;
      for (std::size_t p = 0; p < a.size(); ++p) d += std::abs(static_cast<double>(b[p]) - a[p]);
      diff_sum += d / static_cast<double>(a.size());
    }
    const double pairs = static_cast<double>(frames.size() - 1);
    stats.consistency = cos_sum / pairs;
    stats.dynamic_degree = diff_sum / pairs;
  }
  return stats;
}

}  // namespace abov::io
