#include "abov/denoiser.hpp"

#include <cmath>

#include "abov/errors.hpp"
#include "abov/ops.hpp"
#include "abov/rng.hpp"

namespace abov {

void DenoiserConfig::validate() const {
  if (frame_h < 1 || frame_w < 1 || channels < 1 || patch_h < 1 || patch_w < 1 || hidden < 1 || depth < 1 ||
      heads < 1 || window < 1) {
    throw ConfigError("denoiser config: all extents must be positive");
  }
  if (frame_h % patch_h != 0 || frame_w % patch_w != 0) {
    throw ConfigError("denoiser config: frame size must be divisible by the patch size");
  }
  if (hidden % heads != 0) throw ConfigError("denoiser config: hidden must be divisible by heads");
}

Shape DenoiserConfig::frame_shape() const {
  return {static_cast<std::size_t>(channels), static_cast<std::size_t>(frame_h), static_cast<std::size_t>(frame_w)};
}

Shape DenoiserConfig::window_shape() const {
  return {static_cast<std::size_t>(window), static_cast<std::size_t>(channels), static_cast<std::size_t>(frame_h),
          static_cast<std::size_t>(frame_w)};
}

template <typename Real>
Tensor<Real> Linear<Real>::operator()(const Tensor<Real>& x) const {
  Tensor<Real> y = ops::matmul(x, weight);
  return ops::add(y, ops::broadcast_to(bias, y.shape()));
}

template <typename Real>
Tensor<Real> LayerNormParams<Real>::operator()(const Tensor<Real>& x) const {
  return ops::layer_norm_affine(x, gamma, beta);
}

template <typename Real>
Tensor<Real> modulate_bov(const BovBlock<Real>& block, const Tensor<Real>& ref_feat) {
  const std::size_t h = block.token.numel();
  if (ref_feat.numel() != h) throw ShapeError("modulate_bov: reference feature length mismatch");
  Tensor<Real> feat = ops::reshape(ref_feat, {1, h});
  Tensor<Real> mod = block.mlp_out(ops::gelu(block.mlp_hidden(feat)));  // [1, 2h]
  Tensor<Real> gamma_raw = ops::reshape(ops::slice_axis(mod, 1, 0, h), {h});
  Tensor<Real> shift = ops::reshape(ops::slice_axis(mod, 1, h, 2 * h), {h});
  return ops::add(ops::mul(ops::add_scalar(gamma_raw, Real(1)), block.token), shift);
}

template <typename Real>
Tensor<Real> attention_block(const Tensor<Real>& x, const AttentionParams<Real>& params, int heads,
                             const Tensor<Real>& prefix, AttentionTrace<Real>* trace) {
  if (x.rank() != 3) throw ShapeError("attention_block: expected [sequences, tokens, hidden]");
  const std::size_t seqs = x.dim(0);
  const std::size_t tokens = x.dim(1);
  const std::size_t hidden = x.dim(2);
  const auto nh = static_cast<std::size_t>(heads);
  if (hidden % nh != 0) throw ShapeError("attention_block: hidden not divisible by heads");
  const std::size_t dh = hidden / nh;

  Tensor<Real> h = params.norm(x);
  std::size_t n = tokens;
  if (prefix.defined()) {
    if (prefix.numel() != hidden) throw ShapeError("attention_block: prefix token length mismatch");
    const Tensor<Real> parts[] = {ops::broadcast_to(ops::reshape(prefix, {1, 1, hidden}), {seqs, 1, hidden}), h};
    h = ops::concat_axis<Real>(parts, 1);
    n = tokens + 1;
  }

  Tensor<Real> qkv = ops::reshape(params.qkv(h), {seqs, n, 3, nh, dh});
  qkv = ops::permute(qkv, {2, 0, 3, 1, 4});  // [3, seqs, heads, n, dh]
  const Shape head_shape{seqs * nh, n, dh};
  Tensor<Real> q = ops::reshape(ops::slice_axis(qkv, 0, 0, 1), head_shape);
  Tensor<Real> k = ops::reshape(ops::slice_axis(qkv, 0, 1, 2), head_shape);
  Tensor<Real> v = ops::reshape(ops::slice_axis(qkv, 0, 2, 3), head_shape);

  Tensor<Real> scores = ops::scale(ops::matmul(q, k, /*transpose_b=*/true), Real(1) / std::sqrt(Real(dh)));
  Tensor<Real> probs = ops::softmax_lastdim(scores);
  Tensor<Real> ctx = ops::matmul(probs, v);  // [seqs*heads, n, dh]
  ctx = ops::permute(ops::reshape(ctx, {seqs, nh, n, dh}), {0, 2, 1, 3});
  ctx = ops::reshape(ctx, {seqs, n, hidden});
  if (prefix.defined()) ctx = ops::slice_axis(ctx, 1, 1, n);  // output for the prefix position is dropped

  if (trace != nullptr) {
    trace->tokens_in.push_back(n);
    trace->tokens_out.push_back(ctx.dim(1));
    trace->probabilities.push_back(probs.detach());
  }
  return ops::add(x, params.out(ctx));
}

namespace {

template <typename Real>
Tensor<Real> xavier(Rng& rng, std::size_t in, std::size_t out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  std::vector<Real> w(in * out);
  for (auto& v : w) v = static_cast<Real>(rng.uniform(-bound, bound));
  return Tensor<Real>::from({in, out}, std::move(w), true);
}

template <typename Real>
Tensor<Real> normal(Rng& rng, Shape shape, double stddev) {
  std::vector<Real> w(shape_numel(shape));
  for (auto& v : w) v = static_cast<Real>(stddev * rng.normal());
  return Tensor<Real>::from(std::move(shape), std::move(w), true);
}

template <typename Real>
Linear<Real> make_linear(Rng& rng, std::size_t in, std::size_t out, bool zero = false) {
  Linear<Real> l;
  l.weight = zero ? Tensor<Real>::zeros({in, out}, true) : xavier<Real>(rng, in, out);
  l.bias = Tensor<Real>::zeros({out}, true);
  return l;
}

template <typename Real>
LayerNormParams<Real> make_norm(std::size_t d) {
  return {Tensor<Real>::full({d}, Real(1), true), Tensor<Real>::zeros({d}, true)};
}

template <typename Real>
AttentionParams<Real> make_attention(Rng& rng, std::size_t h) {
  return {make_norm<Real>(h), make_linear<Real>(rng, h, 3 * h), make_linear<Real>(rng, h, h)};
}

template <typename Real>
void push_linear(std::vector<NamedParameter<Real>>& out, const std::string& prefix, Linear<Real>& l) {
  out.push_back({prefix + ".weight", &l.weight});
  out.push_back({prefix + ".bias", &l.bias});
}

template <typename Real>
void push_norm(std::vector<NamedParameter<Real>>& out, const std::string& prefix, LayerNormParams<Real>& n) {
  out.push_back({prefix + ".gamma", &n.gamma});
  out.push_back({prefix + ".beta", &n.beta});
}

template <typename Real>
void push_attention(std::vector<NamedParameter<Real>>& out, const std::string& prefix, AttentionParams<Real>& a) {
  push_norm(out, prefix + ".norm", a.norm);
  push_linear(out, prefix + ".qkv", a.qkv);
  push_linear(out, prefix + ".out", a.out);
}

}  // namespace

template <typename Real>
AdaBovDenoiser<Real>::AdaBovDenoiser(const DenoiserConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  Rng rng = Rng(seed).split("denoiser_init");
  const auto h = static_cast<std::size_t>(config_.hidden);
  const auto pd = static_cast<std::size_t>(config_.patch_dim());
  patch_embed_ = make_linear<Real>(rng, pd, h);
  pos_embed_ = normal<Real>(rng, {static_cast<std::size_t>(config_.patches()), h}, 0.02);
  time_in_ = make_linear<Real>(rng, h, h);
  time_out_ = make_linear<Real>(rng, h, h);
  for (int j = 0; j < config_.depth; ++j) {
    TransformerBlock<Real> b;
    b.spatial = make_attention<Real>(rng, h);
    b.temporal = make_attention<Real>(rng, h);
    b.bov.token = normal<Real>(rng, {h}, 0.02);
    b.bov.mlp_hidden = make_linear<Real>(rng, h, h);
    b.bov.mlp_out = make_linear<Real>(rng, h, 2 * h, /*zero=*/true);
    b.ffn_norm = make_norm<Real>(h);
    b.ffn_in = make_linear<Real>(rng, h, 4 * h);
    b.ffn_out = make_linear<Real>(rng, 4 * h, h);
    blocks_.push_back(std::move(b));
  }
  final_norm_ = make_norm<Real>(h);
  out_proj_ = make_linear<Real>(rng, h, pd, /*zero=*/true);
}

template <typename Real>
std::vector<NamedParameter<Real>> AdaBovDenoiser<Real>::named_parameters() {
  std::vector<NamedParameter<Real>> out;
  push_linear(out, "patch_embed", patch_embed_);
  out.push_back({"pos_embed", &pos_embed_});
  push_linear(out, "time_embed.in", time_in_);
  push_linear(out, "time_embed.out", time_out_);
  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    auto& b = blocks_[j];
    const std::string p = "blocks." + std::to_string(j);
    push_attention(out, p + ".spatial", b.spatial);
    push_attention(out, p + ".temporal", b.temporal);
    out.push_back({p + ".bov.token", &b.bov.token});
    push_linear(out, p + ".bov.mlp_hidden", b.bov.mlp_hidden);
    push_linear(out, p + ".bov.mlp_out", b.bov.mlp_out);
    push_norm(out, p + ".ffn.norm", b.ffn_norm);
    push_linear(out, p + ".ffn.in", b.ffn_in);
    push_linear(out, p + ".ffn.out", b.ffn_out);
  }
  push_norm(out, "final_norm", final_norm_);
  push_linear(out, "out_proj", out_proj_);
  return out;
}

template <typename Real>
std::vector<Tensor<Real>*> AdaBovDenoiser<Real>::parameters() {
  std::vector<Tensor<Real>*> out;
  for (auto& np : named_parameters()) out.push_back(np.tensor);
  return out;
}

template <typename Real>
std::size_t AdaBovDenoiser<Real>::parameter_count() {
  std::size_t n = 0;
  for (auto* p : parameters()) n += p->numel();
  return n;
}

template <typename Real>
Tensor<Real> AdaBovDenoiser<Real>::patchify(const Tensor<Real>& frames, std::size_t count) const {
  const auto c = static_cast<std::size_t>(config_.channels);
  const auto gh = static_cast<std::size_t>(config_.grid_h());
  const auto gw = static_cast<std::size_t>(config_.grid_w());
  const auto ph = static_cast<std::size_t>(config_.patch_h);
  const auto pw = static_cast<std::size_t>(config_.patch_w);
  Tensor<Real> t = ops::reshape(frames, {count, c, gh, ph, gw, pw});
  t = ops::permute(t, {0, 2, 4, 1, 3, 5});
  return ops::reshape(t, {count, gh * gw, c * ph * pw});
}

template <typename Real>
Tensor<Real> AdaBovDenoiser<Real>::embed_reference(const Tensor<Real>& reference) const {
  if (reference.shape() != config_.frame_shape()) {
    throw ShapeError("embed_reference: expected frame " + shape_str(config_.frame_shape()) + ", got " +
                     shape_str(reference.shape()));
  }
  Tensor<Real> tokens = patch_embed_(patchify(reference, 1));  // [1, P, H]
  return ops::reshape(ops::mean_over_axes(tokens, {0, 1}), {static_cast<std::size_t>(config_.hidden)});
}

template <typename Real>
Tensor<Real> AdaBovDenoiser<Real>::modulated_token(std::size_t block, const Tensor<Real>& ref_feat) const {
  return modulate_bov(blocks_.at(block).bov, ref_feat);
}

template <typename Real>
Tensor<Real> AdaBovDenoiser<Real>::temporal_attention(std::size_t block, const Tensor<Real>& tokens,
                                                      const Tensor<Real>& b_tilde,
                                                      AttentionTrace<Real>* trace) const {
  const Tensor<Real> none;
  return attention_block(tokens, blocks_.at(block).temporal, config_.heads,
                         config_.bov_enabled ? b_tilde : none, trace);
}

template <typename Real>
Tensor<Real> AdaBovDenoiser<Real>::timestep_features(std::span<const double> levels) const {
  Tensor<Real> emb = ops::sinusoidal_embed<Real>(levels, static_cast<std::size_t>(config_.hidden));
  return time_out_(ops::gelu(time_in_(emb)));
}

template <typename Real>
Tensor<Real> AdaBovDenoiser<Real>::forward(const Tensor<Real>& window, std::span<const double> levels,
                                           const Tensor<Real>& reference, AttentionTrace<Real>* trace) const {
  if (window.shape() != config_.window_shape()) {
    throw ShapeError("denoiser: expected window " + shape_str(config_.window_shape()) + ", got " +
                     shape_str(window.shape()));
  }
  const auto l = static_cast<std::size_t>(config_.window);
  if (levels.size() != l) throw ShapeError("denoiser: need one noise level per window slot");
  const auto h = static_cast<std::size_t>(config_.hidden);

  Tensor<Real> x = patch_embed_(patchify(window, l));  // [L, P, H]
  x = ops::add(x, ops::broadcast_to(pos_embed_, x.shape()));
  x = ops::add(x, ops::broadcast_to(ops::reshape(timestep_features(levels), {l, 1, h}), x.shape()));

  Tensor<Real> ref_feat;
  if (config_.bov_enabled) ref_feat = embed_reference(reference);

  for (std::size_t j = 0; j < blocks_.size(); ++j) {
    const auto& b = blocks_[j];
    x = attention_block(x, b.spatial, config_.heads);
    Tensor<Real> xt = ops::permute(x, {1, 0, 2});  // [P, L, H]
    Tensor<Real> b_tilde;
    if (config_.bov_enabled) b_tilde = modulate_bov(b.bov, ref_feat);
    xt = temporal_attention(j, xt, b_tilde, trace);
    x = ops::permute(xt, {1, 0, 2});
    x = ops::add(x, b.ffn_out(ops::gelu(b.ffn_in(b.ffn_norm(x)))));
  }

  Tensor<Real> patches = out_proj_(final_norm_(x));  // [L, P, patch_dim]
  const auto c = static_cast<std::size_t>(config_.channels);
  const auto gh = static_cast<std::size_t>(config_.grid_h());
  const auto gw = static_cast<std::size_t>(config_.grid_w());
  const auto ph = static_cast<std::size_t>(config_.patch_h);
  const auto pw = static_cast<std::size_t>(config_.patch_w);
  Tensor<Real> out = ops::reshape(patches, {l, gh, gw, c, ph, pw});
  out = ops::permute(out, {0, 3, 1, 4, 2, 5});
  return ops::reshape(out, config_.window_shape());
}

template <typename Real>
void AdaBovDenoiser<Real>::perturb(double stddev, std::uint64_t seed) {
  Rng rng = Rng(seed).split("perturb");
  for (auto* t : parameters()) {
    for (auto& v : t->mutable_data()) v = static_cast<Real>(v + stddev * rng.normal());
  }
}

template <typename Real>
AdaBovDenoiser<Real> AdaBovDenoiser<Real>::clone() const {
  return cast<Real>();
}

template <typename Real>
template <typename To>
AdaBovDenoiser<To> AdaBovDenoiser<Real>::cast() const {
  AdaBovDenoiser<To> out(config_, 0);
  auto& self = const_cast<AdaBovDenoiser&>(*this);
  auto src = self.named_parameters();
  auto dst = out.named_parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto values = src[i].tensor->data();
    auto target = dst[i].tensor->mutable_data();
    for (std::size_t j = 0; j < values.size(); ++j) target[j] = static_cast<To>(values[j]);
  }
  return out;
}

template struct Linear<float>;
template struct Linear<double>;
template struct LayerNormParams<float>;
template struct LayerNormParams<double>;
template Tensor<float> modulate_bov(const BovBlock<float>&, const Tensor<float>&);
template Tensor<double> modulate_bov(const BovBlock<double>&, const Tensor<double>&);
template Tensor<float> attention_block(const Tensor<float>&, const AttentionParams<float>&, int,
                                       const Tensor<float>&, AttentionTrace<float>*);
template Tensor<double> attention_block(const Tensor<double>&, const AttentionParams<double>&, int,
                                        const Tensor<double>&, AttentionTrace<double>*);
template class AdaBovDenoiser<float>;
template class AdaBovDenoiser<double>;
template AdaBovDenoiser<double> AdaBovDenoiser<float>::cast<double>() const;
template AdaBovDenoiser<float> AdaBovDenoiser<double>::cast<float>() const;

}  // namespace abov
