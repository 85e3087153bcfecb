#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "surgpetl/blocks.hpp"
#include "surgpetl/config.hpp"
#include "surgpetl/head.hpp"
#include "surgpetl/sampling.hpp"

namespace surgpetl {

/// kPaper: zero-initialized up-projections and classifier (identity start).
/// kRandom: additionally perturbs those zero arrays so every path carries
/// gradient from the first step; used by tests and diagnostics.
enum class ModelInit { kPaper, kRandom };

class Model {
 public:
  Model(const ValidatedConfig& vc, ModelInit init, uint64_t seed, bool materialize = true)
      : cfg_(vc), init_rng_(seed), droppath_rng_(seed ^ 0x9e3779b97f4a7c15ULL) {
    Build build;
    build.rng = &init_rng_;
    build.materialize = materialize;
    build.drop_path_rate = vc.model.drop_path_rate;

    const int64_t dim = vc.scale.dim, heads = vc.scale.heads;
    const int64_t tokens = vc.tokens_per_frame;
    const int64_t max_frames =
        std::max(vc.clip.frames, vc.model.scheme == Scheme::kDualPath ? int64_t{1} : int64_t{1});
    stem_ = StemWeights(build, 3, vc.model.patch_size, tokens, dim, max_frames,
                        vc.model.temporal_pos_embed);
    norm_w_ = build.param("norm.weight", {dim}, Init::kZero, false);
    if (materialize) std::fill(norm_w_->value.begin(), norm_w_->value.end(), 1.0);
    norm_b_ = build.param("norm.bias", {dim}, Init::kZero, false);

    for (int64_t i = 0; i < vc.scale.blocks; ++i)
      frozen_.emplace_back(build, dim, vc.scale.mlp_ratio, "blocks." + std::to_string(i));

    const int64_t width = vc.adapter_width;
    for (int64_t i = 0; i < vc.scale.blocks; ++i) {
      const std::string prefix = "blocks." + std::to_string(i);
      switch (vc.model.scheme) {
        case Scheme::kAim:
          aim_.emplace_back(build, frozen_[static_cast<size_t>(i)], dim, heads, width, prefix);
          break;
        case Scheme::kStAdapter:
          st_.emplace_back(build, frozen_[static_cast<size_t>(i)], dim, heads,
                           vc.model.st_adapter_width, vc.model.conv_kernel, prefix);
          break;
        case Scheme::kDualPath:
          dual_.emplace_back(build, frozen_[static_cast<size_t>(i)], dim, heads, width,
                             vc.model.dual_path_temporal_joint, prefix);
          break;
        case Scheme::kSta:
          sta_.emplace_back(build, frozen_[static_cast<size_t>(i)], dim, heads, width,
                            vc.clip.frames, vc.model.sta_k_values, prefix);
          break;
      }
    }

    const int64_t head_in = vc.model.scheme == Scheme::kDualPath ? 2 * dim : dim;
    const int64_t hidden = vc.model.head_hidden > 0 ? vc.model.head_hidden : dim;
    head_ = DecoderHead(build, head_in, hidden, vc.model.num_classes, "head");

    patch_spatial_ = PatchEmbed(stem_, vc.model.patch_size);
    patch_grid_ = PatchEmbed(stem_, vc.model.patch_size);
    norm_spatial_ = LayerNorm(norm_w_, norm_b_);
    norm_grid_ = LayerNorm(norm_w_, norm_b_);

    collect_params();
    if (materialize && init == ModelInit::kRandom) randomize_zero_arrays();
  }

  const ValidatedConfig& config() const { return cfg_; }

  /// Clip logits. Dual-path requires the grid frameset; other schemes ignore
  /// it. Eval mode (training=false) disables stochastic depth.
  Tensor forward(const FrameVolume& vol, const GridFrameset* grid, bool training) {
    Tensor x = patch_spatial_.forward(vol.pixels);
    if (cfg_.model.scheme == Scheme::kDualPath) {
      if (!grid) throw ShapeError("dual-path forward needs a grid frameset");
      Tensor gridpix = grid->pixels.reshaped(
          {int64_t{1}, grid->pixels.dim(0), grid->pixels.dim(1), grid->pixels.dim(2)});
      Tensor xt = patch_grid_.forward(gridpix);
      for (auto& b : dual_) {
        auto [s, t] = b.forward(x, xt, training, &droppath_rng_);
        x = std::move(s);
        xt = std::move(t);
      }
      x = norm_spatial_.forward(x);
      xt = norm_grid_.forward(xt);
      return head_.forward(concat_streams(x, xt));
    }
    for (auto& b : aim_) x = b.forward(x, training, &droppath_rng_);
    for (auto& b : st_) x = b.forward(x, training, &droppath_rng_);
    for (auto& b : sta_) x = b.forward(x, training, &droppath_rng_);
    x = norm_spatial_.forward(x);
    return head_.forward(x);
  }

  void backward(const Tensor& g_logits) {
    Tensor g = head_.backward(g_logits);
    if (cfg_.model.scheme == Scheme::kDualPath) {
      auto [gs, gt] = split_streams(g);
      gs = norm_spatial_.backward(gs);
      gt = norm_grid_.backward(gt);
      for (auto it = dual_.rbegin(); it != dual_.rend(); ++it) {
        auto [ns, nt] = it->backward(gs, gt);
        gs = std::move(ns);
        gt = std::move(nt);
      }
      patch_spatial_.backward(gs);
      patch_grid_.backward(gt);
      return;
    }
    g = norm_spatial_.backward(g);
    for (auto it = sta_.rbegin(); it != sta_.rend(); ++it) g = it->backward(g);
    for (auto it = st_.rbegin(); it != st_.rend(); ++it) g = it->backward(g);
    for (auto it = aim_.rbegin(); it != aim_.rend(); ++it) g = it->backward(g);
    patch_spatial_.backward(g);
  }

  const std::vector<ParamPtr>& parameters() const { return params_; }

  std::vector<ParamPtr> tunable_parameters() const {
    std::vector<ParamPtr> out;
    for (const auto& p : params_)
      if (p->trainable) out.push_back(p);
    return out;
  }

  ParameterPartition partition() const { return partition_from(params_); }

  void zero_grads() {
    for (auto& p : params_)
      if (p->trainable) p->zero_grad();
  }

  /// Ablation hook: clamps every STA router beta to zero and freezes it,
  /// turning STA into a spatial-adapter-only module.
  void freeze_router_beta() {
    for (auto& p : params_)
      if (p->name.find(".router.beta") != std::string::npos) {
        std::fill(p->value.begin(), p->value.end(), 0.0);
        p->trainable = false;
        p->grad.clear();
      }
  }

  Rng& droppath_rng() { return droppath_rng_; }

  // direct access for oracle tests
  const StemWeights& stem() const { return stem_; }
  const std::vector<FrozenBlockWeights>& frozen_blocks() const { return frozen_; }
  ParamPtr norm_weight() const { return norm_w_; }
  ParamPtr norm_bias() const { return norm_b_; }
  DecoderHead& head() { return head_; }
  std::vector<StaBlock>& sta_blocks() { return sta_; }
  std::vector<AimBlock>& aim_blocks() { return aim_; }
  std::vector<StAdapterBlock>& st_blocks() { return st_; }
  std::vector<DualPathBlock>& dual_blocks() { return dual_; }

 private:
  Tensor concat_streams(const Tensor& xs, const Tensor& xt) {
    const int64_t t = xs.dim(0), kp1 = xs.dim(1), d = xs.dim(2);
    Tensor out({t, kp1, 2 * d});
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t k = 0; k < kp1; ++k)
        for (int64_t e = 0; e < d; ++e) {
          out.at(ti, k, e) = xs.at(ti, k, e);
          out.at(ti, k, d + e) = xt.at(0, k, e);
        }
    return out;
  }

  std::pair<Tensor, Tensor> split_streams(const Tensor& g) {
    const int64_t t = g.dim(0), kp1 = g.dim(1), d2 = g.dim(2);
    const int64_t d = d2 / 2;
    Tensor gs({t, kp1, d}), gt({int64_t{1}, kp1, d});
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t k = 0; k < kp1; ++k)
        for (int64_t e = 0; e < d; ++e) {
          gs.at(ti, k, e) = g.at(ti, k, e);
          gt.at(0, k, e) += g.at(ti, k, d + e);  // broadcast in forward, sum here
        }
    return {gs, gt};
  }

  void collect_params() {
    stem_.params(params_);
    params_.push_back(norm_w_);
    params_.push_back(norm_b_);
    for (const auto& fb : frozen_) fb.params(params_);
    for (const auto& b : aim_) b.tunable_params(params_);
    for (const auto& b : st_) b.tunable_params(params_);
    for (const auto& b : dual_) b.tunable_params(params_);
    for (const auto& b : sta_) b.tunable_params(params_);
    head_.params(params_);
  }

  void randomize_zero_arrays() {
    for (auto& p : params_) {
      if (!p->trainable) continue;
      bool all_zero = true;
      for (double v : p->value)
        if (v != 0.0) {
          all_zero = false;
          break;
        }
      if (all_zero)
        for (double& v : p->value) v = init_rng_.uniform(-0.02, 0.02);
    }
  }

  ValidatedConfig cfg_;
  Rng init_rng_, droppath_rng_;
  StemWeights stem_;
  ParamPtr norm_w_, norm_b_;
  std::vector<FrozenBlockWeights> frozen_;
  std::vector<AimBlock> aim_;
  std::vector<StAdapterBlock> st_;
  std::vector<DualPathBlock> dual_;
  std::vector<StaBlock> sta_;
  DecoderHead head_;
  PatchEmbed patch_spatial_, patch_grid_;
  LayerNorm norm_spatial_, norm_grid_;
  std::vector<ParamPtr> params_;
};

// ---------------------------------------------------------------------------
// Cross-entropy on the target frame's logits.

inline double softmax_cross_entropy(const Tensor& logits, int64_t label, Tensor* dlogits) {
  const int64_t n = logits.numel();
  double mx = logits[0];
  for (int64_t i = 1; i < n; ++i) mx = std::max(mx, logits[i]);
  double z = 0.0;
  for (int64_t i = 0; i < n; ++i) z += std::exp(logits[i] - mx);
  const double logz = std::log(z) + mx;
  const double loss = logz - logits[label];
  if (dlogits) {
    *dlogits = Tensor(logits.shape());
    for (int64_t i = 0; i < n; ++i) {
      (*dlogits)[i] = std::exp(logits[i] - logz);
    }
    (*dlogits)[label] -= 1.0;
  }
  return loss;
}

}  // namespace surgpetl
