#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "surgpetl/config.hpp"
#include "surgpetl/errors.hpp"
#include "surgpetl/nn.hpp"
#include "surgpetl/tensor.hpp"

namespace surgpetl {

/// Bottleneck adapter: down-projection, GELU, zero-initialized up-projection.
/// Serial placements (wrapping an attention/MLP output) keep the inner
/// residual, so a zero-initialized adapter passes its input through exactly.
/// Parallel placements (joint adaptation on a norm side-output) use the
/// bottleneck term alone, contributing nothing at initialization.
struct Adapter {
  Linear down, up;
  Gelu act;
  bool with_skip = true;

  Adapter() = default;
  Adapter(Build& build, int64_t dim, int64_t width, const std::string& name, bool skip)
      : with_skip(skip) {
    down = Linear(build, dim, width, name + ".down", Init::kXavierUniform, true);
    up = Linear(build, width, dim, name + ".up", Init::kZero, true);
  }

  Tensor bottleneck(const Tensor& x) { return up.forward(act.forward(down.forward(x))); }
  Tensor bottleneck_backward(const Tensor& g) {
    return down.backward(act.backward(up.backward(g)));
  }

  Tensor forward(const Tensor& x) {
    Tensor h = bottleneck(x);
    if (with_skip) h += x;
    return h;
  }
  Tensor backward(const Tensor& g) {
    Tensor gin = bottleneck_backward(g);
    if (with_skip) gin += g;
    return gin;
  }

  void params(std::vector<ParamPtr>& out) const {
    out.push_back(down.w);
    out.push_back(down.b);
    out.push_back(up.w);
    out.push_back(up.b);
  }
};

// ---------------------------------------------------------------------------
// 3D-Adapter (ST-Adapter): FC down, depthwise 3D conv, FC up. No
// nonlinearity between the projections; the conv carries the temporal mixing.

/// Depthwise 3D convolution over the (T, gh, gw) token grid, one filter per
/// channel, zero-padded to preserve shape. The class token bypasses the
/// convolution: it has no grid position.
struct DepthwiseConv3d {
  ParamPtr w;  // (channels, kt, kh, kw)
  ParamPtr b;  // (channels)
  ConvKernel kernel;
  Tensor x_;  // (T, K+1, c)
  int64_t gh_ = 0, gw_ = 0;

  DepthwiseConv3d() = default;
  DepthwiseConv3d(Build& build, int64_t channels, ConvKernel k, const std::string& name)
      : kernel(k) {
    w = build.param(name + ".weight", {channels, k.t, k.h, k.w}, Init::kXavierUniform, true);
    b = build.param(name + ".bias", {channels}, Init::kZero, true);
  }

  Tensor forward(const Tensor& x) {
    const int64_t t = x.dim(0), kp1 = x.dim(1), c = x.dim(2);
    const int64_t k = kp1 - 1;
    const int64_t side = static_cast<int64_t>(std::llround(std::sqrt(double(k))));
    if (side * side != k)
      throw ShapeError("token count " + std::to_string(k) + " is not a perfect square");
    gh_ = gw_ = side;
    x_ = x;
    Tensor out({t, kp1, c});
    // class token (index 0 on the token axis) copies through
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t ch = 0; ch < c; ++ch) out.at(ti, 0, ch) = x.at(ti, 0, ch);
    const int64_t rt = kernel.t / 2, rh = kernel.h / 2, rw = kernel.w / 2;
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t y = 0; y < side; ++y)
        for (int64_t xg = 0; xg < side; ++xg)
          for (int64_t ch = 0; ch < c; ++ch) {
            double acc = b->value[static_cast<size_t>(ch)];
            for (int64_t dt = 0; dt < kernel.t; ++dt) {
              const int64_t st = ti + dt - rt;
              if (st < 0 || st >= t) continue;
              for (int64_t dy = 0; dy < kernel.h; ++dy) {
                const int64_t sy = y + dy - rh;
                if (sy < 0 || sy >= side) continue;
                for (int64_t dx = 0; dx < kernel.w; ++dx) {
                  const int64_t sx = xg + dx - rw;
                  if (sx < 0 || sx >= side) continue;
                  acc += w->value[static_cast<size_t>(((ch * kernel.t + dt) * kernel.h + dy) *
                                                      kernel.w + dx)] *
                         x.at(st, 1 + sy * side + sx, ch);
                }
              }
            }
            out.at(ti, 1 + y * side + xg, ch) = acc;
          }
    return out;
  }

  Tensor backward(const Tensor& g) {
    const int64_t t = x_.dim(0), kp1 = x_.dim(1), c = x_.dim(2);
    const int64_t side = gh_;
    Tensor gin({t, kp1, c});
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t ch = 0; ch < c; ++ch) gin.at(ti, 0, ch) = g.at(ti, 0, ch);
    const int64_t rt = kernel.t / 2, rh = kernel.h / 2, rw = kernel.w / 2;
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t y = 0; y < side; ++y)
        for (int64_t xg = 0; xg < side; ++xg)
          for (int64_t ch = 0; ch < c; ++ch) {
            const double go = g.at(ti, 1 + y * side + xg, ch);
            if (b->trainable) b->grad[static_cast<size_t>(ch)] += go;
            for (int64_t dt = 0; dt < kernel.t; ++dt) {
              const int64_t st = ti + dt - rt;
              if (st < 0 || st >= t) continue;
              for (int64_t dy = 0; dy < kernel.h; ++dy) {
                const int64_t sy = y + dy - rh;
                if (sy < 0 || sy >= side) continue;
                for (int64_t dx = 0; dx < kernel.w; ++dx) {
                  const int64_t sx = xg + dx - rw;
                  if (sx < 0 || sx >= side) continue;
                  const size_t wi = static_cast<size_t>(
                      ((ch * kernel.t + dt) * kernel.h + dy) * kernel.w + dx);
                  if (w->trainable) w->grad[wi] += go * x_.at(st, 1 + sy * side + sx, ch);
                  gin.at(st, 1 + sy * side + sx, ch) += go * w->value[wi];
                }
              }
            }
          }
    return gin;
  }
};

struct Adapter3d {
  Linear down, up;
  DepthwiseConv3d conv;
  bool with_skip = true;

  Adapter3d() = default;
  Adapter3d(Build& build, int64_t dim, int64_t width, ConvKernel kernel, const std::string& name)
      : conv(build, width, kernel, name + ".conv") {
    down = Linear(build, dim, width, name + ".down", Init::kXavierUniform, true);
    up = Linear(build, width, dim, name + ".up", Init::kZero, true);
  }

  Tensor forward(const Tensor& x) {
    Tensor h = up.forward(conv.forward(down.forward(x)));
    if (with_skip) h += x;
    return h;
  }
  Tensor backward(const Tensor& g) {
    Tensor gin = down.backward(conv.backward(up.backward(g)));
    if (with_skip) gin += g;
    return gin;
  }

  void params(std::vector<ParamPtr>& out) const {
    out.push_back(down.w);
    out.push_back(down.b);
    out.push_back(conv.w);
    out.push_back(conv.b);
    out.push_back(up.w);
    out.push_back(up.b);
  }
};

// ---------------------------------------------------------------------------
// Feature Re-embedding

/// Couples frames within windows of w: frame i pairs with frame i+w/2, their
/// channels are concatenated (2c), passed through GELU -> FC(2c,2c) -> GELU,
/// and split back into the two frames' slots. Every frame is covered exactly
/// once, so the temporal length is preserved.
struct FeatureReembed {
  int64_t window = 2;
  Linear mix;  // (2c, 2c)
  Gelu pre_act, post_act;
  std::vector<std::pair<int64_t, int64_t>> pairs_;
  std::vector<int64_t> in_shape_;

  FeatureReembed() = default;
  FeatureReembed(Build& build, int64_t width, int64_t w, const std::string& name) : window(w) {
    mix = Linear(build, 2 * width, 2 * width, name + ".mix", Init::kXavierUniform, true);
  }

  static std::vector<std::pair<int64_t, int64_t>> pairing(int64_t t, int64_t w) {
    if (w < 2 || w % 2 != 0)
      throw ConfigException({{"window", "w must be even and >= 2"}});
    if (t % w != 0) throw ConfigException({{"window", "w must divide T"}});
    std::vector<std::pair<int64_t, int64_t>> pairs;
    for (int64_t base = 0; base < t; base += w)
      for (int64_t i = 0; i < w / 2; ++i) pairs.emplace_back(base + i, base + i + w / 2);
    return pairs;
  }

  Tensor forward(const Tensor& f) {
    const int64_t t = f.dim(0), kp1 = f.dim(1), c = f.dim(2);
    pairs_ = pairing(t, window);
    in_shape_ = f.shape();
    const int64_t np = static_cast<int64_t>(pairs_.size());
    Tensor packed({np, kp1, 2 * c});
    for (int64_t p = 0; p < np; ++p) {
      const auto [a, bidx] = pairs_[static_cast<size_t>(p)];
      for (int64_t k = 0; k < kp1; ++k)
        for (int64_t ch = 0; ch < c; ++ch) {
          packed.at(p, k, ch) = f.at(a, k, ch);
          packed.at(p, k, c + ch) = f.at(bidx, k, ch);
        }
    }
    Tensor mixed = post_act.forward(mix.forward(pre_act.forward(packed)));
    Tensor out({t, kp1, c});
    for (int64_t p = 0; p < np; ++p) {
      const auto [a, bidx] = pairs_[static_cast<size_t>(p)];
      for (int64_t k = 0; k < kp1; ++k)
        for (int64_t ch = 0; ch < c; ++ch) {
          out.at(a, k, ch) = mixed.at(p, k, ch);
          out.at(bidx, k, ch) = mixed.at(p, k, c + ch);
        }
    }
    return out;
  }

  Tensor backward(const Tensor& g) {
    const int64_t kp1 = g.dim(1), c = g.dim(2);
    const int64_t np = static_cast<int64_t>(pairs_.size());
    Tensor g_mixed({np, kp1, 2 * c});
    for (int64_t p = 0; p < np; ++p) {
      const auto [a, bidx] = pairs_[static_cast<size_t>(p)];
      for (int64_t k = 0; k < kp1; ++k)
        for (int64_t ch = 0; ch < c; ++ch) {
          g_mixed.at(p, k, ch) = g.at(a, k, ch);
          g_mixed.at(p, k, c + ch) = g.at(bidx, k, ch);
        }
    }
    Tensor g_packed = pre_act.backward(mix.backward(post_act.backward(g_mixed)));
    Tensor gin(in_shape_);
    for (int64_t p = 0; p < np; ++p) {
      const auto [a, bidx] = pairs_[static_cast<size_t>(p)];
      for (int64_t k = 0; k < kp1; ++k)
        for (int64_t ch = 0; ch < c; ++ch) {
          gin.at(a, k, ch) = g_packed.at(p, k, ch);
          gin.at(bidx, k, ch) = g_packed.at(p, k, c + ch);
        }
    }
    return gin;
  }
};

// ---------------------------------------------------------------------------
// Spatial-Temporal Adaptation

/// STA = input + alpha * GELU(h Wd_s) Wu_s + sum_j beta_j * FR_j(h Wd_t_j) Wu_t_j.
/// Both branches are bottleneck-only (no inner residual); the router scalars
/// alpha/beta weight their contributions. Multi-k variants run one temporal
/// branch per window count, summed.
struct Sta {
  struct TemporalBranch {
    Linear down, up;
    FeatureReembed fr;
    ParamPtr beta;
    Tensor branch_out_;  // pre-beta output, cached for the router gradient
  };

  Linear spatial_down, spatial_up;
  Gelu spatial_act;
  ParamPtr alpha;
  std::vector<TemporalBranch> temporal;
  Tensor spatial_out_;

  Sta() = default;
  Sta(Build& build, int64_t dim, int64_t width, int64_t frames,
      const std::vector<int64_t>& k_values, const std::string& name) {
    spatial_down = Linear(build, dim, width, name + ".spatial.down", Init::kXavierUniform, true);
    spatial_up = Linear(build, width, dim, name + ".spatial.up", Init::kZero, true);
    alpha = build.param(name + ".router.alpha", {1}, Init::kZero, true);
    if (build.materialize) alpha->value[0] = 1.0;
    for (size_t j = 0; j < k_values.size(); ++j) {
      TemporalBranch tb;
      const std::string tname = name + ".temporal" + std::to_string(j);
      tb.down = Linear(build, dim, width, tname + ".down", Init::kXavierUniform, true);
      tb.up = Linear(build, width, dim, tname + ".up", Init::kZero, true);
      if (frames % k_values[j] != 0)
        throw ConfigException({{"sta_k_values", "k must divide T"}});
      tb.fr = FeatureReembed(build, width, frames / k_values[j], tname);
      tb.beta = build.param(name + ".router.beta" + std::to_string(j), {1}, Init::kZero, true);
      if (build.materialize) tb.beta->value[0] = 1.0;
      temporal.push_back(std::move(tb));
    }
  }

  Tensor forward(const Tensor& h) {
    spatial_out_ = spatial_up.forward(spatial_act.forward(spatial_down.forward(h)));
    Tensor out = h;
    {
      Tensor scaled = spatial_out_;
      scaled *= alpha->value[0];
      out += scaled;
    }
    for (auto& tb : temporal) {
      tb.branch_out_ = tb.up.forward(tb.fr.forward(tb.down.forward(h)));
      Tensor scaled = tb.branch_out_;
      scaled *= tb.beta->value[0];
      out += scaled;
    }
    return out;
  }

  Tensor backward(const Tensor& g) {
    Tensor gin = g;  // residual path
    {
      if (alpha->trainable) {
        double acc = 0.0;
        for (int64_t i = 0; i < g.numel(); ++i) acc += g[i] * spatial_out_[i];
        alpha->grad[0] += acc;
      }
      Tensor gb = g;
      gb *= alpha->value[0];
      gin += spatial_down.backward(spatial_act.backward(spatial_up.backward(gb)));
    }
    for (auto& tb : temporal) {
      if (tb.beta->trainable) {
        double acc = 0.0;
        for (int64_t i = 0; i < g.numel(); ++i) acc += g[i] * tb.branch_out_[i];
        tb.beta->grad[0] += acc;
      }
      Tensor gb = g;
      gb *= tb.beta->value[0];
      gin += tb.down.backward(tb.fr.backward(tb.up.backward(gb)));
    }
    return gin;
  }

  void params(std::vector<ParamPtr>& out) const {
    out.push_back(spatial_down.w);
    out.push_back(spatial_down.b);
    out.push_back(spatial_up.w);
    out.push_back(spatial_up.b);
    for (const auto& tb : temporal) {
      out.push_back(tb.down.w);
      out.push_back(tb.down.b);
      out.push_back(tb.up.w);
      out.push_back(tb.up.b);
      out.push_back(tb.fr.mix.w);
      out.push_back(tb.fr.mix.b);
    }
    out.push_back(alpha);
    for (const auto& tb : temporal) out.push_back(tb.beta);
  }
};

}  // namespace surgpetl
