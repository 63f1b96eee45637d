#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "abov/tensor.hpp"

namespace abov {

struct DenoiserConfig {
  int frame_h = 16;
  int frame_w = 16;
  int channels = 1;
  int patch_h = 2;
  int patch_w = 2;
  int hidden = 64;
  int depth = 4;  // spatial + temporal + feed-forward block triples
  int heads = 4;
  int window = 8;  // L
  bool bov_enabled = true;

  // ConfigError on any broken divisibility or non-positive extent.
  void validate() const;
  int grid_h() const { return frame_h / patch_h; }
  int grid_w() const { return frame_w / patch_w; }
  int patches() const { return grid_h() * grid_w(); }
  int patch_dim() const { return channels * patch_h * patch_w; }
  Shape frame_shape() const;
  Shape window_shape() const;
};

template <typename Real>
struct Linear {
  Tensor<Real> weight;  // [in, out]
  Tensor<Real> bias;    // [out]

  Tensor<Real> operator()(const Tensor<Real>& x) const;
};

template <typename Real>
struct LayerNormParams {
  Tensor<Real> gamma;
  Tensor<Real> beta;

  Tensor<Real> operator()(const Tensor<Real>& x) const;
};

template <typename Real>
struct AttentionParams {
  LayerNormParams<Real> norm;
  Linear<Real> qkv;  // hidden -> 3 * hidden
  Linear<Real> out;
};

// Learnable begin-of-video token b_j and its block-specific modulation MLP_j.
// mlp_out is zero-initialized, so gamma_raw = beta = 0 at init.
template <typename Real>
struct BovBlock {
  Tensor<Real> token;        // [hidden]
  Linear<Real> mlp_hidden;   // hidden -> hidden
  Linear<Real> mlp_out;      // hidden -> 2 * hidden, split (gamma_raw, beta)
};

template <typename Real>
struct TransformerBlock {
  AttentionParams<Real> spatial;
  AttentionParams<Real> temporal;
  BovBlock<Real> bov;
  LayerNormParams<Real> ffn_norm;
  Linear<Real> ffn_in;   // hidden -> 4 * hidden
  Linear<Real> ffn_out;  // 4 * hidden -> hidden
};

template <typename Real>
struct NamedParameter {
  std::string name;
  Tensor<Real>* tensor;
};

// Optional instrumentation of temporal attention calls.
template <typename Real>
struct AttentionTrace {
  std::vector<std::size_t> tokens_in;   // sequence length entering attention
  std::vector<std::size_t> tokens_out;  // length returned to the residual stream
  std::vector<Tensor<Real>> probabilities;
};

// b~ = (1 + gamma_raw) * b + beta with (gamma_raw, beta) = MLP_j(ref_feat).
template <typename Real>
Tensor<Real> modulate_bov(const BovBlock<Real>& block, const Tensor<Real>& ref_feat);

// Pre-norm multi-head self-attention with residual over x: [sequences, tokens, hidden].
// When `prefix` is defined ([hidden]), it is prepended to every sequence after
// the norm and its output position is dropped, so the result keeps x's shape.
template <typename Real>
Tensor<Real> attention_block(const Tensor<Real>& x, const AttentionParams<Real>& params, int heads,
                             const Tensor<Real>& prefix = {}, AttentionTrace<Real>* trace = nullptr);

// Patchified frame-token transformer predicting per-frame noise, with ada-BOV
// tokens in every temporal attention block.
template <typename Real>
class AdaBovDenoiser {
 public:
  AdaBovDenoiser(const DenoiserConfig& config, std::uint64_t seed);

  const DenoiserConfig& config() const noexcept { return config_; }

  std::vector<NamedParameter<Real>> named_parameters();
  std::vector<Tensor<Real>*> parameters();
  std::size_t parameter_count();

  // Patch-embeds a clean frame [C, H, W] and mean-pools tokens -> [hidden].
  Tensor<Real> embed_reference(const Tensor<Real>& reference) const;

  Tensor<Real> modulated_token(std::size_t block, const Tensor<Real>& ref_feat) const;

  // tokens: [sites, L, hidden]. Uses the block's BOV token when b_tilde is
  // defined and bov is enabled, plain L-token attention otherwise.
  Tensor<Real> temporal_attention(std::size_t block, const Tensor<Real>& tokens, const Tensor<Real>& b_tilde,
                                  AttentionTrace<Real>* trace = nullptr) const;

  // window: [L, C, H, W]; levels: L per-frame noise levels; reference: [C, H, W].
  // Returns eps-hat with the window's shape.
  Tensor<Real> forward(const Tensor<Real>& window, std::span<const double> levels, const Tensor<Real>& reference,
                       AttentionTrace<Real>* trace = nullptr) const;

  // Adds N(0, stddev^2) noise to every parameter, including zero-initialized
  // ones. Used to move off the identity-at-init point in checks.
  void perturb(double stddev, std::uint64_t seed);

  AdaBovDenoiser clone() const;

  template <typename To>
  AdaBovDenoiser<To> cast() const;

  std::vector<TransformerBlock<Real>>& blocks() noexcept { return blocks_; }
  const std::vector<TransformerBlock<Real>>& blocks() const noexcept { return blocks_; }

 private:
  template <typename>
  friend class AdaBovDenoiser;

  AdaBovDenoiser() = default;

  Tensor<Real> patchify(const Tensor<Real>& frames, std::size_t count) const;
  Tensor<Real> timestep_features(std::span<const double> levels) const;

  DenoiserConfig config_;
  Linear<Real> patch_embed_;
  Tensor<Real> pos_embed_;  // [patches, hidden]
  Linear<Real> time_in_;
  Linear<Real> time_out_;
  std::vector<TransformerBlock<Real>> blocks_;
  LayerNormParams<Real> final_norm_;
  Linear<Real> out_proj_;  // zero-initialized
};

// Free-function spellings of the model operations.
template <typename Real>
Tensor<Real> embed_reference(const Tensor<Real>& reference, const AdaBovDenoiser<Real>& model) {
  return model.embed_reference(reference);
}

template <typename Real>
Tensor<Real> denoiser_forward(const AdaBovDenoiser<Real>& model, const Tensor<Real>& window,
                              std::span<const double> levels, const Tensor<Real>& reference) {
  return model.forward(window, levels, reference);
}

}  // namespace abov
