#pragma once

// Stream denoising: a window of L frames at progressive noise levels
// [T/L, 2T/L, ..., T]. Each iteration runs n substeps that lower every level
// by T/(nL), emits the now-clean slot-0 frame, makes it the new reference,
// shifts the window and appends a pure-noise frame at level T.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "abov/denoiser.hpp"
#include "abov/diffusion.hpp"
#include "abov/rng.hpp"
#include "abov/tensor.hpp"

namespace abov {

using Frame = Tensor<float>;  // [C, H, W]
using Frames = std::vector<Frame>;

struct GenerationConfig {
  int window = 8;     // L
  int substeps = 4;   // n
  int frames = 16;    // K
  std::uint64_t seed = 42;
  bool bov_enabled = true;
  // Multiplies each appended pure-noise frame; 1 for normal sampling.
  double append_noise_scale = 1.0;

  void validate() const;
};

struct ReferenceFrame {
  Frame values;
  std::int64_t frame_index = 0;
};

struct FrameWindow {
  Frames frames;
  std::vector<NoiseLevel> levels;
  std::vector<std::int64_t> indices;  // source frame index per slot
};

struct EmittedFrame {
  Frame values;
  std::int64_t frame_index = 0;
};

// The eps-prediction interface the sampler drives.
class EpsPredictor {
 public:
  virtual ~EpsPredictor() = default;
  // window: [L, C, H, W]; levels: one per slot; reference: [C, H, W].
  virtual Tensor<float> predict(const Tensor<float>& window, std::span<const NoiseLevel> levels,
                                const Frame& reference) = 0;
};

// Runs a trained denoiser without recording a tape.
class ModelPredictor final : public EpsPredictor {
 public:
  explicit ModelPredictor(const AdaBovDenoiser<float>& model) : model_(model) {}
  Tensor<float> predict(const Tensor<float>& window, std::span<const NoiseLevel> levels,
                        const Frame& reference) override;

 private:
  const AdaBovDenoiser<float>& model_;
};

struct StreamState;
using SubstepObserver = std::function<void(const StreamState&)>;

struct StreamState {
  FrameWindow window;
  ReferenceFrame reference;
  std::int64_t iteration = 1;  // k
  int substep = 0;             // substeps completed in this iteration
  int substeps = 1;            // n
  const VarianceSchedule* schedule = nullptr;
  Rng rng;                     // appended-noise stream
  std::int64_t emitted = 0;
  std::int64_t evaluations = 0;
  double append_noise_scale = 1.0;
  SubstepObserver on_substep;  // called after every substep when set

  int window_size() const { return static_cast<int>(window.frames.size()); }
};

// Noise level of slot m (0-based) after s substeps of an iteration.
NoiseLevel slot_level(int max_timestep, int window, int substeps, int slot, int substeps_done);

// initial_frames: L + 1 clean frames z_0..z_L. z_0 becomes the reference and
// z_1..z_L are noised to [T/L, ..., T] with independent draws from `rng`.
StreamState init_stream(std::span<const Frame> initial_frames, const GenerationConfig& config,
                        const VarianceSchedule& schedule, const Rng& rng);

// Non-canonical cold start: replicates one seed frame L + 1 times.
StreamState init_stream_self_start(const Frame& seed_frame, const GenerationConfig& config,
                                   const VarianceSchedule& schedule, const Rng& rng);

// One denoiser evaluation followed by a DDIM step of every slot by T/(nL).
void substep(StreamState& state, EpsPredictor& predictor);

// n substeps, then emit slot 0, update the reference, shift and append noise.
EmittedFrame iterate(StreamState& state, EpsPredictor& predictor);

// K iterations; frames come back ordered by index.
std::vector<EmittedFrame> run(StreamState& state, EpsPredictor& predictor, int frames);

Tensor<float> stack_frames(std::span<const Frame> frames);

}  // namespace abov
