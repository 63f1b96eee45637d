#pragma once

#include <cstddef>
#include <span>

#include "abov/stream.hpp"

namespace abov::io {

struct FrameStatistics {
  std::size_t frames = 0;
  double mean = 0.0;      // over every pixel of every frame
  double variance = 0.0;  // population variance over the same values
  // Mean cosine similarity of adjacent flattened frames. Two all-zero frames
  // count as identical; one all-zero frame against a nonzero one scores 0.
  double consistency = 0.0;
  // Mean absolute adjacent-frame difference per pixel.
  double dynamic_degree = 0.0;
};

// DataError when `frames` is empty or shapes disagree. Adjacent-frame metrics
// are 0 for a single frame.
FrameStatistics frame_statistics(std::span<const Frame> frames);

double cosine_similarity(std::span<const float> a, std::span<const float> b);

}  // namespace abov::io
