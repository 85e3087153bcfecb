#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "surgpetl/config.hpp"
#include "surgpetl/errors.hpp"
#include "surgpetl/nn.hpp"
#include "surgpetl/tensor.hpp"

namespace surgpetl {

/// Frozen weights of one pre-trained ViT block. Training never mutates
/// these; T-MSA reuses the same attention weights along the temporal axis.
struct FrozenBlockWeights {
  ParamPtr ln1_w, ln1_b, ln2_w, ln2_b;
  AttentionWeights attn;
  MlpWeights mlp;

  FrozenBlockWeights() = default;
  FrozenBlockWeights(Build& build, int64_t dim, int64_t mlp_ratio, const std::string& prefix) {
    LayerNorm ln1(build, dim, prefix + ".ln1", false);
    ln1_w = ln1.w;
    ln1_b = ln1.b;
    LayerNorm ln2(build, dim, prefix + ".ln2", false);
    ln2_w = ln2.w;
    ln2_b = ln2.b;
    attn = AttentionWeights(build, dim, prefix + ".attn", false);
    mlp = MlpWeights(build, dim, dim * mlp_ratio, prefix + ".mlp", false);
  }

  void params(std::vector<ParamPtr>& out) const {
    out.push_back(ln1_w);
    out.push_back(ln1_b);
    out.push_back(attn.qkv_w);
    out.push_back(attn.qkv_b);
    out.push_back(attn.proj_w);
    out.push_back(attn.proj_b);
    out.push_back(ln2_w);
    out.push_back(ln2_b);
    out.push_back(mlp.fc1_w);
    out.push_back(mlp.fc1_b);
    out.push_back(mlp.fc2_w);
    out.push_back(mlp.fc2_b);
  }
};

/// Patch embedding stem weights plus position/class embeddings, shared by
/// every stream that tokenizes pixels.
struct StemWeights {
  ParamPtr patch_w;  // (C*P*P, D)
  ParamPtr patch_b;  // (D)
  ParamPtr pos_embed;  // (K+1, D)
  ParamPtr cls_token;  // (D)
  ParamPtr temporal_pos;  // (max_T, D), tunable, only if enabled

  StemWeights() = default;
  StemWeights(Build& build, int64_t channels, int64_t patch, int64_t tokens, int64_t dim,
              int64_t max_frames, bool with_temporal_pos) {
    patch_w = build.param("patch_embed.weight", {channels * patch * patch, dim},
                          Init::kXavierUniform, false);
    patch_b = build.param("patch_embed.bias", {dim}, Init::kZero, false);
    pos_embed = build.param("pos_embed", {tokens + 1, dim}, Init::kNormal02, false);
    cls_token = build.param("cls_token", {dim}, Init::kNormal02, false);
    if (with_temporal_pos)
      temporal_pos = build.param("temporal_pos_embed", {max_frames, dim}, Init::kZero, true);
  }

  void params(std::vector<ParamPtr>& out) const {
    out.push_back(patch_w);
    out.push_back(patch_b);
    out.push_back(pos_embed);
    out.push_back(cls_token);
    if (temporal_pos) out.push_back(temporal_pos);
  }
};

/// Tokenizes (T, C, H, W) pixels into (T, K+1, D): non-overlapping P x P
/// patches per frame, a class token prepended per frame, spatial position
/// embedding added per frame.
struct PatchEmbed {
  const StemWeights* w = nullptr;
  int64_t patch = 16;
  Tensor patches_;  // cached flattened patches, (T*K, C*P*P)

  PatchEmbed() = default;
  PatchEmbed(const StemWeights& weights, int64_t patch_size) : w(&weights), patch(patch_size) {}

  Tensor forward(const Tensor& pixels) {
    if (pixels.ndim() != 4) throw ShapeError("patch_embed expects (T,C,H,W)");
    const int64_t t = pixels.dim(0), c = pixels.dim(1), h = pixels.dim(2), wd = pixels.dim(3);
    if (h % patch != 0 || wd % patch != 0)
      throw DimensionError("spatial dims must be divisible by patch size");
    const int64_t gh = h / patch, gw = wd / patch, k = gh * gw;
    const int64_t d = w->patch_w->shape[1], pd = w->patch_w->shape[0];
    if (c * patch * patch != pd) throw ShapeError("patch embedding input width mismatch");

    patches_ = Tensor({t * k, pd});
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t py = 0; py < gh; ++py)
        for (int64_t px = 0; px < gw; ++px) {
          double* row = patches_.data() + ((ti * k) + py * gw + px) * pd;
          int64_t o = 0;
          for (int64_t ch = 0; ch < c; ++ch)
            for (int64_t y = 0; y < patch; ++y)
              for (int64_t x = 0; x < patch; ++x)
                row[o++] = pixels.at(ti, ch, py * patch + y, px * patch + x);
        }

    Tensor proj({t * k, d});
    matmul(patches_.data(), w->patch_w->value.data(), proj.data(), t * k, pd, d);

    Tensor out({t, k + 1, d});
    for (int64_t ti = 0; ti < t; ++ti) {
      for (int64_t e = 0; e < d; ++e)
        out.at(ti, 0, e) = w->cls_token->value[static_cast<size_t>(e)] +
                           w->pos_embed->value[static_cast<size_t>(e)];
      for (int64_t ki = 0; ki < k; ++ki)
        for (int64_t e = 0; e < d; ++e)
          out.at(ti, ki + 1, e) = proj[(ti * k + ki) * d + e] +
                                  w->patch_b->value[static_cast<size_t>(e)] +
                                  w->pos_embed->value[static_cast<size_t>((ki + 1) * d + e)];
      if (w->temporal_pos)
        for (int64_t kk = 0; kk < k + 1; ++kk)
          for (int64_t e = 0; e < d; ++e)
            out.at(ti, kk, e) += w->temporal_pos->value[static_cast<size_t>(ti * d + e)];
    }
    return out;
  }

  /// Pixels are leaves; only the (optional) temporal position embedding is
  /// trainable here, the rest of the stem is frozen.
  void backward(const Tensor& g) {
    if (w->temporal_pos && w->temporal_pos->trainable) {
      const int64_t t = g.dim(0), kp1 = g.dim(1), d = g.dim(2);
      for (int64_t ti = 0; ti < t; ++ti)
        for (int64_t kk = 0; kk < kp1; ++kk)
          for (int64_t e = 0; e < d; ++e)
            w->temporal_pos->grad[static_cast<size_t>(ti * d + e)] += g.at(ti, kk, e);
    }
  }
};

/// Spatial MSA: attention over the K+1 token axis, independently per frame.
struct SpatialAttention {
  MultiheadAttention attn;

  SpatialAttention() = default;
  SpatialAttention(const AttentionWeights& w, int64_t heads) : attn(w, heads) {}

  Tensor forward(const Tensor& x) { return attn.forward(x); }
  Tensor backward(const Tensor& g) { return attn.backward(g); }
};

/// T-MSA: the same frozen weights applied with attention along the temporal
/// axis, independently per token index. The class token participates like
/// any spatial position.
struct TemporalAttention {
  MultiheadAttention attn;

  TemporalAttention() = default;
  TemporalAttention(const AttentionWeights& w, int64_t heads) : attn(w, heads) {}

  Tensor forward(const Tensor& x) { return transpose01(attn.forward(transpose01(x))); }
  Tensor backward(const Tensor& g) { return transpose01(attn.backward(transpose01(g))); }
};

}  // namespace surgpetl
