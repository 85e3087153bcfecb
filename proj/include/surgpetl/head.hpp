#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "surgpetl/nn.hpp"
#include "surgpetl/tensor.hpp"

namespace surgpetl {

/// Full (channel-mixing) convolution along the temporal axis, 1x1 spatially,
/// zero-padded to preserve T. Input/output layout (T, S, C).
struct TemporalConv {
  ParamPtr w;  // (out_ch, in_ch, kt)
  ParamPtr b;  // (out_ch)
  int64_t kt = 3;
  Tensor x_;

  TemporalConv() = default;
  TemporalConv(Build& build, int64_t in_ch, int64_t out_ch, int64_t kernel_t,
               const std::string& name)
      : kt(kernel_t) {
    w = build.param(name + ".weight", {out_ch, in_ch, kt}, Init::kXavierUniform, true);
    b = build.param(name + ".bias", {out_ch}, Init::kZero, true);
  }

  Tensor forward(const Tensor& x) {
    const int64_t t = x.dim(0), s = x.dim(1), ci = x.dim(2);
    const int64_t co = w->shape[0];
    const int64_t r = kt / 2;
    x_ = x;
    Tensor out({t, s, co});
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t si = 0; si < s; ++si)
        for (int64_t oc = 0; oc < co; ++oc) {
          double acc = b->value[static_cast<size_t>(oc)];
          for (int64_t dt = 0; dt < kt; ++dt) {
            const int64_t st = ti + dt - r;
            if (st < 0 || st >= t) continue;
            const double* xp = x.data() + (st * s + si) * ci;
            const double* wp = w->value.data() + (oc * ci + 0) * kt + dt;
            for (int64_t ic = 0; ic < ci; ++ic) acc += wp[ic * kt] * xp[ic];
          }
          out.at(ti, si, oc) = acc;
        }
    return out;
  }

  Tensor backward(const Tensor& g) {
    const int64_t t = x_.dim(0), s = x_.dim(1), ci = x_.dim(2);
    const int64_t co = w->shape[0];
    const int64_t r = kt / 2;
    Tensor gin({t, s, ci});
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t si = 0; si < s; ++si)
        for (int64_t oc = 0; oc < co; ++oc) {
          const double go = g.at(ti, si, oc);
          if (b->trainable) b->grad[static_cast<size_t>(oc)] += go;
          for (int64_t dt = 0; dt < kt; ++dt) {
            const int64_t st = ti + dt - r;
            if (st < 0 || st >= t) continue;
            const double* xp = x_.data() + (st * s + si) * ci;
            double* gp = gin.data() + (st * s + si) * ci;
            for (int64_t ic = 0; ic < ci; ++ic) {
              const size_t wi = static_cast<size_t>((oc * ci + ic) * kt + dt);
              if (w->trainable) w->grad[wi] += go * xp[ic];
              gp[ic] += go * w->value[wi];
            }
          }
        }
    return gin;
  }
};

/// Compact I3D-style decoder: the class token is dropped, the remaining
/// (T, sqrt(K), sqrt(K), D) map runs through two temporal conv layers with
/// GELUs, global average pooling, and a zero-initialized classifier. One
/// logit vector per clip, for the clip's target frame.
struct DecoderHead {
  TemporalConv conv1, conv2;
  Gelu act1, act2;
  Linear fc;
  int64_t frames_ = 0, spatial_ = 0;

  DecoderHead() = default;
  DecoderHead(Build& build, int64_t in_dim, int64_t hidden, int64_t num_classes,
              const std::string& name) {
    conv1 = TemporalConv(build, in_dim, hidden, 3, name + ".conv1");
    conv2 = TemporalConv(build, hidden, hidden, 3, name + ".conv2");
    fc = Linear(build, hidden, num_classes, name + ".fc", Init::kZero, true);
  }

  Tensor forward(const Tensor& x) {
    if (x.ndim() != 3) throw ShapeError("head expects (T,K+1,D)");
    const int64_t t = x.dim(0), kp1 = x.dim(1), d = x.dim(2);
    const int64_t k = kp1 - 1;
    const int64_t side = static_cast<int64_t>(std::llround(std::sqrt(double(k))));
    if (side * side != k) throw ShapeError("token count must be a perfect square for the decoder");
    frames_ = t;
    spatial_ = k;
    Tensor grid({t, k, d});
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t ki = 0; ki < k; ++ki)
        for (int64_t e = 0; e < d; ++e) grid.at(ti, ki, e) = x.at(ti, ki + 1, e);
    Tensor h = act2.forward(conv2.forward(act1.forward(conv1.forward(grid))));
    const int64_t hidden = h.dim(2);
    Tensor pooled({1, hidden});
    const double inv = 1.0 / double(t * k);
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t ki = 0; ki < k; ++ki)
        for (int64_t e = 0; e < hidden; ++e) pooled[e] += h.at(ti, ki, e) * inv;
    Tensor logits = fc.forward(pooled);
    return logits.reshaped({logits.numel()});
  }

  /// Returns the gradient w.r.t. the (T, K+1, D) input; the class-token row
  /// receives zeros (it was dropped).
  Tensor backward(const Tensor& g_logits) {
    Tensor gp = fc.backward(g_logits.reshaped({int64_t{1}, g_logits.numel()}));
    const int64_t hidden = gp.numel();
    const int64_t t = frames_, k = spatial_;
    const double inv = 1.0 / double(t * k);
    Tensor gh({t, k, hidden});
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t ki = 0; ki < k; ++ki)
        for (int64_t e = 0; e < hidden; ++e) gh.at(ti, ki, e) = gp[e] * inv;
    Tensor ggrid = conv1.backward(act1.backward(conv2.backward(act2.backward(gh))));
    const int64_t d = ggrid.dim(2);
    Tensor gin({t, k + 1, d});
    for (int64_t ti = 0; ti < t; ++ti)
      for (int64_t ki = 0; ki < k; ++ki)
        for (int64_t e = 0; e < d; ++e) gin.at(ti, ki + 1, e) = ggrid.at(ti, ki, e);
    return gin;
  }

  void params(std::vector<ParamPtr>& out) const {
    out.push_back(conv1.w);
    out.push_back(conv1.b);
    out.push_back(conv2.w);
    out.push_back(conv2.b);
    out.push_back(fc.w);
    out.push_back(fc.b);
  }
};

}  // namespace surgpetl
