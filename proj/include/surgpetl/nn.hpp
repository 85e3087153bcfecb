#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "surgpetl/rng.hpp"
#include "surgpetl/tensor.hpp"

namespace surgpetl {

/// A named model parameter. Frozen parameters never allocate a gradient
/// buffer; non-materialized parameters carry shape only (used for parameter
/// accounting at ViT-B/L scale without allocating hundreds of MB).
struct Parameter {
  std::string name;
  std::vector<int64_t> shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool trainable = true;

  int64_t count() const { return Tensor::numel_of(shape); }
  bool materialized() const { return !value.empty() || count() == 0; }

  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
  void ensure_grad() {
    if (trainable && grad.empty()) grad.assign(value.size(), 0.0);
  }
};

using ParamPtr = std::shared_ptr<Parameter>;

enum class Init { kZero, kXavierUniform, kNormal02 };

/// Construction context threaded through module constructors: the init RNG,
/// whether to allocate storage, and the block-level drop-path rate.
struct Build {
  Rng* rng = nullptr;
  bool materialize = true;
  double drop_path_rate = 0.0;

  ParamPtr param(std::string name, std::vector<int64_t> shape, Init init, bool trainable) {
    auto p = std::make_shared<Parameter>();
    p->name = std::move(name);
    p->shape = std::move(shape);
    p->trainable = trainable;
    if (materialize) {
      p->value.assign(static_cast<size_t>(p->count()), 0.0);
      switch (init) {
        case Init::kZero:
          break;
        case Init::kXavierUniform: {
          // fan_in/fan_out from the trailing two dims; 1D falls back to fan=n.
          const int n = static_cast<int>(p->shape.size());
          const double fan_in = n >= 2 ? double(p->shape[n - 2]) : double(p->count());
          const double fan_out = n >= 2 ? double(p->shape[n - 1]) : double(p->count());
          const double a = std::sqrt(6.0 / (fan_in + fan_out));
          for (double& v : p->value) v = rng->uniform(-a, a);
          break;
        }
        case Init::kNormal02:
          for (double& v : p->value) v = rng->normal(0.0, 0.02);
          break;
      }
      p->ensure_grad();
    }
    return p;
  }
};

inline Tensor param_tensor(const Parameter& p) { return Tensor(p.shape, p.value); }

// ---------------------------------------------------------------------------
// Activations

inline double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline double gelu_grad_scalar(double x) {
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  return cdf + x * pdf;
}

/// Exact (erf-based) GELU, applied elementwise.
struct Gelu {
  Tensor x_;
  Tensor forward(const Tensor& x) {
    x_ = x;
    Tensor out = x;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = gelu_scalar(out[i]);
    return out;
  }
  Tensor backward(const Tensor& g) {
    Tensor gin = g;
    for (int64_t i = 0; i < gin.numel(); ++i) gin[i] *= gelu_grad_scalar(x_[i]);
    return gin;
  }
};

// ---------------------------------------------------------------------------
// Linear

/// y = x W + b over the last axis; rows are everything before it.
/// Weights are shared by pointer so two call sites (e.g. spatial and temporal
/// attention reusing one frozen projection) keep separate caches.
struct Linear {
  ParamPtr w;  // (in, out)
  ParamPtr b;  // (out), may be null
  Tensor x_;

  Linear() = default;
  Linear(Build& build, int64_t in, int64_t out, const std::string& name,
         Init init = Init::kXavierUniform, bool trainable = true, bool bias = true) {
    w = build.param(name + ".weight", {in, out}, init, trainable);
    if (bias) b = build.param(name + ".bias", {out}, Init::kZero, trainable);
  }

  int64_t in_dim() const { return w->shape[0]; }
  int64_t out_dim() const { return w->shape[1]; }

  Tensor forward(const Tensor& x) {
    x_ = x;
    const int64_t in = in_dim(), out = out_dim();
    const int64_t rows = x.numel() / in;
    std::vector<int64_t> oshape = x.shape();
    oshape.back() = out;
    Tensor y(oshape);
    matmul(x.data(), w->value.data(), y.data(), rows, in, out);
    if (b) {
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < out; ++j) y[r * out + j] += b->value[static_cast<size_t>(j)];
    }
    return y;
  }

  Tensor backward(const Tensor& g) {
    const int64_t in = in_dim(), out = out_dim();
    const int64_t rows = g.numel() / out;
    if (w->trainable) matmul_tn_acc(x_.data(), g.data(), w->grad.data(), rows, in, out);
    if (b && b->trainable) {
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < out; ++j) b->grad[static_cast<size_t>(j)] += g[r * out + j];
    }
    Tensor gin(x_.shape());
    matmul_nt(g.data(), w->value.data(), gin.data(), rows, out, in);
    return gin;
  }
};

// ---------------------------------------------------------------------------
// LayerNorm

/// Normalizes the last axis. Weight/bias are shared by pointer; frozen
/// backbone norms are reused at several call sites per block.
struct LayerNorm {
  static constexpr double kEps = 1e-6;
  ParamPtr w, b;
  Tensor xhat_;
  std::vector<double> inv_std_;

  LayerNorm() = default;
  LayerNorm(Build& build, int64_t dim, const std::string& name, bool trainable = true) {
    w = build.param(name + ".weight", {dim}, Init::kZero, trainable);
    if (build.materialize) std::fill(w->value.begin(), w->value.end(), 1.0);
    b = build.param(name + ".bias", {dim}, Init::kZero, trainable);
  }
  LayerNorm(ParamPtr weight, ParamPtr bias) : w(std::move(weight)), b(std::move(bias)) {}

  Tensor forward(const Tensor& x) {
    const int64_t d = x.shape().back();
    const int64_t rows = x.numel() / d;
    xhat_ = Tensor(x.shape());
    inv_std_.assign(static_cast<size_t>(rows), 0.0);
    Tensor out(x.shape());
    for (int64_t r = 0; r < rows; ++r) {
      const double* xp = x.data() + r * d;
      double mean = 0.0;
      for (int64_t j = 0; j < d; ++j) mean += xp[j];
      mean /= double(d);
      double var = 0.0;
      for (int64_t j = 0; j < d; ++j) var += (xp[j] - mean) * (xp[j] - mean);
      var /= double(d);
      const double inv = 1.0 / std::sqrt(var + kEps);
      inv_std_[static_cast<size_t>(r)] = inv;
      for (int64_t j = 0; j < d; ++j) {
        const double xh = (xp[j] - mean) * inv;
        xhat_[r * d + j] = xh;
        out[r * d + j] = xh * w->value[static_cast<size_t>(j)] + b->value[static_cast<size_t>(j)];
      }
    }
    return out;
  }

  Tensor backward(const Tensor& g) {
    const int64_t d = g.shape().back();
    const int64_t rows = g.numel() / d;
    Tensor gin(g.shape());
    for (int64_t r = 0; r < rows; ++r) {
      const double* gp = g.data() + r * d;
      const double* xh = xhat_.data() + r * d;
      double sum_gw = 0.0, sum_gwx = 0.0;
      for (int64_t j = 0; j < d; ++j) {
        const double gw = gp[j] * w->value[static_cast<size_t>(j)];
        sum_gw += gw;
        sum_gwx += gw * xh[j];
      }
      const double inv = inv_std_[static_cast<size_t>(r)];
      for (int64_t j = 0; j < d; ++j) {
        const double gw = gp[j] * w->value[static_cast<size_t>(j)];
        gin[r * d + j] = inv * (gw - sum_gw / double(d) - xh[j] * sum_gwx / double(d));
      }
      if (w->trainable)
        for (int64_t j = 0; j < d; ++j) w->grad[static_cast<size_t>(j)] += gp[j] * xh[j];
      if (b->trainable)
        for (int64_t j = 0; j < d; ++j) b->grad[static_cast<size_t>(j)] += gp[j];
    }
    return gin;
  }
};

// ---------------------------------------------------------------------------
// Multi-head self-attention

/// qkv is one fused (D, 3D) projection; proj maps back to D. Matches the
/// `attn.qkv` / `attn.proj` checkpoint naming.
struct AttentionWeights {
  ParamPtr qkv_w, qkv_b, proj_w, proj_b;

  AttentionWeights() = default;
  AttentionWeights(Build& build, int64_t dim, const std::string& name, bool trainable) {
    qkv_w = build.param(name + ".qkv.weight", {dim, 3 * dim}, Init::kXavierUniform, trainable);
    qkv_b = build.param(name + ".qkv.bias", {3 * dim}, Init::kZero, trainable);
    proj_w = build.param(name + ".proj.weight", {dim, dim}, Init::kXavierUniform, trainable);
    proj_b = build.param(name + ".proj.bias", {dim}, Init::kZero, trainable);
  }
};

/// Self-attention over the middle axis of a (B, S, D) tensor, independently
/// per batch row. Spatial MSA feeds (T, K+1, D); temporal MSA feeds the
/// transposed (K+1, T, D) so attention runs along time per token index.
struct MultiheadAttention {
  const AttentionWeights* w = nullptr;
  int64_t heads = 1;

  Tensor x_, q_, k_, v_, probs_, attn_out_;

  MultiheadAttention() = default;
  MultiheadAttention(const AttentionWeights& weights, int64_t num_heads)
      : w(&weights), heads(num_heads) {}

  Tensor forward(const Tensor& x) {
    if (x.ndim() != 3) throw ShapeError("attention expects (B,S,D), got " + x.shape_str());
    const int64_t bsz = x.dim(0), s = x.dim(1), d = x.dim(2);
    if (d != w->qkv_w->shape[0]) throw ShapeError("attention dim mismatch");
    if (d % heads != 0) throw ShapeError("dim not divisible by head count");
    const int64_t hd = d / heads;
    const double scale = 1.0 / std::sqrt(double(hd));

    x_ = x;
    Tensor qkv({bsz, s, 3 * d});
    matmul(x.data(), w->qkv_w->value.data(), qkv.data(), bsz * s, d, 3 * d);
    for (int64_t r = 0; r < bsz * s; ++r)
      for (int64_t j = 0; j < 3 * d; ++j) qkv[r * 3 * d + j] += w->qkv_b->value[static_cast<size_t>(j)];

    q_ = Tensor({bsz, s, d});
    k_ = Tensor({bsz, s, d});
    v_ = Tensor({bsz, s, d});
    for (int64_t r = 0; r < bsz * s; ++r)
      for (int64_t j = 0; j < d; ++j) {
        q_[r * d + j] = qkv[r * 3 * d + j];
        k_[r * d + j] = qkv[r * 3 * d + d + j];
        v_[r * d + j] = qkv[r * 3 * d + 2 * d + j];
      }

    probs_ = Tensor({bsz, heads, s, s});
    attn_out_ = Tensor({bsz, s, d});
    std::vector<double> scores(static_cast<size_t>(s));
    for (int64_t bi = 0; bi < bsz; ++bi) {
      for (int64_t h = 0; h < heads; ++h) {
        for (int64_t i = 0; i < s; ++i) {
          const double* qi = q_.data() + (bi * s + i) * d + h * hd;
          double mx = -1e300;
          for (int64_t j = 0; j < s; ++j) {
            const double* kj = k_.data() + (bi * s + j) * d + h * hd;
            double dot = 0.0;
            for (int64_t e = 0; e < hd; ++e) dot += qi[e] * kj[e];
            scores[static_cast<size_t>(j)] = dot * scale;
            mx = std::max(mx, scores[static_cast<size_t>(j)]);
          }
          double z = 0.0;
          for (int64_t j = 0; j < s; ++j) z += std::exp(scores[static_cast<size_t>(j)] - mx);
          for (int64_t j = 0; j < s; ++j)
            probs_.at(bi, h, i, j) = std::exp(scores[static_cast<size_t>(j)] - mx) / z;
          double* oi = attn_out_.data() + (bi * s + i) * d + h * hd;
          for (int64_t e = 0; e < hd; ++e) oi[e] = 0.0;
          for (int64_t j = 0; j < s; ++j) {
            const double p = probs_.at(bi, h, i, j);
            const double* vj = v_.data() + (bi * s + j) * d + h * hd;
            for (int64_t e = 0; e < hd; ++e) oi[e] += p * vj[e];
          }
        }
      }
    }

    Tensor out({bsz, s, d});
    matmul(attn_out_.data(), w->proj_w->value.data(), out.data(), bsz * s, d, d);
    for (int64_t r = 0; r < bsz * s; ++r)
      for (int64_t j = 0; j < d; ++j) out[r * d + j] += w->proj_b->value[static_cast<size_t>(j)];
    return out;
  }

  Tensor backward(const Tensor& g) {
    const int64_t bsz = x_.dim(0), s = x_.dim(1), d = x_.dim(2);
    const int64_t hd = d / heads;
    const double scale = 1.0 / std::sqrt(double(hd));

    // proj
    if (w->proj_w->trainable)
      matmul_tn_acc(attn_out_.data(), g.data(), w->proj_w->grad.data(), bsz * s, d, d);
    if (w->proj_b->trainable)
      for (int64_t r = 0; r < bsz * s; ++r)
        for (int64_t j = 0; j < d; ++j) w->proj_b->grad[static_cast<size_t>(j)] += g[r * d + j];
    Tensor g_attn({bsz, s, d});
    matmul_nt(g.data(), w->proj_w->value.data(), g_attn.data(), bsz * s, d, d);

    Tensor gq({bsz, s, d}), gk({bsz, s, d}), gv({bsz, s, d});
    std::vector<double> gp(static_cast<size_t>(s));
    for (int64_t bi = 0; bi < bsz; ++bi) {
      for (int64_t h = 0; h < heads; ++h) {
        for (int64_t i = 0; i < s; ++i) {
          const double* go = g_attn.data() + (bi * s + i) * d + h * hd;
          // dV and dP
          for (int64_t j = 0; j < s; ++j) {
            const double p = probs_.at(bi, h, i, j);
            double* gvj = gv.data() + (bi * s + j) * d + h * hd;
            const double* vj = v_.data() + (bi * s + j) * d + h * hd;
            double dot = 0.0;
            for (int64_t e = 0; e < hd; ++e) {
              gvj[e] += p * go[e];
              dot += go[e] * vj[e];
            }
            gp[static_cast<size_t>(j)] = dot;
          }
          // softmax backward: ds_j = p_j * (gp_j - sum_l p_l gp_l)
          double dot_pg = 0.0;
          for (int64_t j = 0; j < s; ++j) dot_pg += probs_.at(bi, h, i, j) * gp[static_cast<size_t>(j)];
          const double* qi = q_.data() + (bi * s + i) * d + h * hd;
          double* gqi = gq.data() + (bi * s + i) * d + h * hd;
          for (int64_t j = 0; j < s; ++j) {
            const double ds = probs_.at(bi, h, i, j) * (gp[static_cast<size_t>(j)] - dot_pg) * scale;
            const double* kj = k_.data() + (bi * s + j) * d + h * hd;
            double* gkj = gk.data() + (bi * s + j) * d + h * hd;
            for (int64_t e = 0; e < hd; ++e) {
              gqi[e] += ds * kj[e];
              gkj[e] += ds * qi[e];
            }
          }
        }
      }
    }

    Tensor g_qkv({bsz, s, 3 * d});
    for (int64_t r = 0; r < bsz * s; ++r)
      for (int64_t j = 0; j < d; ++j) {
        g_qkv[r * 3 * d + j] = gq[r * d + j];
        g_qkv[r * 3 * d + d + j] = gk[r * d + j];
        g_qkv[r * 3 * d + 2 * d + j] = gv[r * d + j];
      }
    if (w->qkv_w->trainable)
      matmul_tn_acc(x_.data(), g_qkv.data(), w->qkv_w->grad.data(), bsz * s, d, 3 * d);
    if (w->qkv_b->trainable)
      for (int64_t r = 0; r < bsz * s; ++r)
        for (int64_t j = 0; j < 3 * d; ++j)
          w->qkv_b->grad[static_cast<size_t>(j)] += g_qkv[r * 3 * d + j];
    Tensor gin({bsz, s, d});
    matmul_nt(g_qkv.data(), w->qkv_w->value.data(), gin.data(), bsz * s, 3 * d, d);
    return gin;
  }
};

// ---------------------------------------------------------------------------
// MLP (fc1 -> GELU -> fc2), weights shared by pointer

struct MlpWeights {
  ParamPtr fc1_w, fc1_b, fc2_w, fc2_b;

  MlpWeights() = default;
  MlpWeights(Build& build, int64_t dim, int64_t hidden, const std::string& name, bool trainable) {
    fc1_w = build.param(name + ".fc1.weight", {dim, hidden}, Init::kXavierUniform, trainable);
    fc1_b = build.param(name + ".fc1.bias", {hidden}, Init::kZero, trainable);
    fc2_w = build.param(name + ".fc2.weight", {hidden, dim}, Init::kXavierUniform, trainable);
    fc2_b = build.param(name + ".fc2.bias", {dim}, Init::kZero, trainable);
  }
};

struct Mlp {
  Linear fc1, fc2;
  Gelu act;

  Mlp() = default;
  explicit Mlp(const MlpWeights& w) {
    fc1.w = w.fc1_w;
    fc1.b = w.fc1_b;
    fc2.w = w.fc2_w;
    fc2.b = w.fc2_b;
  }

  Tensor forward(const Tensor& x) { return fc2.forward(act.forward(fc1.forward(x))); }
  Tensor backward(const Tensor& g) { return fc1.backward(act.backward(fc2.backward(g))); }
};

// ---------------------------------------------------------------------------
// Stochastic depth

/// Drops a whole residual branch with probability `rate` during training,
/// scaling surviving branches by 1/(1-rate). Identity in eval mode.
struct DropPath {
  double rate = 0.0;
  bool kept_ = true;
  double scale_ = 1.0;

  Tensor forward(const Tensor& x, bool training, Rng* rng) {
    if (!training || rate <= 0.0) {
      kept_ = true;
      scale_ = 1.0;
      return x;
    }
    kept_ = !rng->bernoulli(rate);
    scale_ = kept_ ? 1.0 / (1.0 - rate) : 0.0;
    Tensor out = x;
    out *= scale_;
    return out;
  }
  Tensor backward(const Tensor& g) const {
    Tensor gin = g;
    gin *= scale_;
    return gin;
  }
};

}  // namespace surgpetl
