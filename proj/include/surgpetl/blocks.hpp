#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "surgpetl/adapters.hpp"
#include "surgpetl/backbone.hpp"
#include "surgpetl/nn.hpp"
#include "surgpetl/tensor.hpp"

namespace surgpetl {

/// Per-branch stochastic depth state shared by all block types. Branches are
/// the additive residual terms; the identity path is never dropped.
struct BranchDrop {
  DropPath dp;
  explicit BranchDrop(double rate = 0.0) { dp.rate = rate; }
  Tensor apply(const Tensor& x, bool training, Rng* rng) { return dp.forward(x, training, rng); }
  Tensor grad(const Tensor& g) const { return dp.backward(g); }
};

// ---------------------------------------------------------------------------
// AIM block: temporal, spatial and joint adaptation around a frozen block.
//   X_t  = X   + phi_t(T-MSA(LN1(X)))
//   X_s  = X_t + phi_s(MSA(LN1(X_t)))
//   X_st = X_s + MLP(LN2(X_s)) + phi_mlp(LN2(X_s))
// phi_t / phi_s keep the inner residual; phi_mlp is bottleneck-only.
struct AimBlock {
  LayerNorm ln1_t, ln1_s, ln2;
  TemporalAttention tmsa;
  SpatialAttention smsa;
  Mlp mlp;
  Adapter adapter_t, adapter_s, adapter_mlp;
  BranchDrop dp_t, dp_s, dp_mlp, dp_joint;

  AimBlock(Build& build, const FrozenBlockWeights& fw, int64_t dim, int64_t heads, int64_t width,
           const std::string& prefix)
      : ln1_t(fw.ln1_w, fw.ln1_b),
        ln1_s(fw.ln1_w, fw.ln1_b),
        ln2(fw.ln2_w, fw.ln2_b),
        tmsa(fw.attn, heads),
        smsa(fw.attn, heads),
        mlp(fw.mlp),
        adapter_t(build, dim, width, prefix + ".adapter_t", true),
        adapter_s(build, dim, width, prefix + ".adapter_s", true),
        adapter_mlp(build, dim, width, prefix + ".adapter_mlp", false),
        dp_t(build.drop_path_rate),
        dp_s(build.drop_path_rate),
        dp_mlp(build.drop_path_rate),
        dp_joint(build.drop_path_rate) {}

  Tensor forward(const Tensor& x, bool training, Rng* rng) {
    Tensor xt = x;
    xt += dp_t.apply(adapter_t.forward(tmsa.forward(ln1_t.forward(x))), training, rng);
    Tensor xs = xt;
    xs += dp_s.apply(adapter_s.forward(smsa.forward(ln1_s.forward(xt))), training, rng);
    Tensor m = ln2.forward(xs);
    Tensor out = xs;
    out += dp_mlp.apply(mlp.forward(m), training, rng);
    out += dp_joint.apply(adapter_mlp.bottleneck(m), training, rng);
    return out;
  }

  Tensor backward(const Tensor& g) {
    Tensor gm = mlp.backward(dp_mlp.grad(g));
    gm += adapter_mlp.bottleneck_backward(dp_joint.grad(g));
    Tensor gxs = g;
    gxs += ln2.backward(gm);
    Tensor gxt = gxs;
    gxt += ln1_s.backward(smsa.backward(adapter_s.backward(dp_s.grad(gxs))));
    Tensor gx = gxt;
    gx += ln1_t.backward(tmsa.backward(adapter_t.backward(dp_t.grad(gxt))));
    return gx;
  }

  void tunable_params(std::vector<ParamPtr>& out) const {
    adapter_t.params(out);
    adapter_s.params(out);
    adapter_mlp.params(out);
  }
};

// ---------------------------------------------------------------------------
// ST-Adapter block: two 3D-Adapters placed serially.
//   X'   = phi(X)
//   X''  = phi(X' + MSA(LN1(X')))
//   X_st = X'' + MLP(LN2(X''))
struct StAdapterBlock {
  LayerNorm ln1, ln2;
  SpatialAttention smsa;
  Mlp mlp;
  Adapter3d pre, mid;
  BranchDrop dp_pre, dp_attn, dp_mid, dp_mlp;

  StAdapterBlock(Build& build, const FrozenBlockWeights& fw, int64_t dim, int64_t heads,
                 int64_t width, ConvKernel kernel, const std::string& prefix)
      : ln1(fw.ln1_w, fw.ln1_b),
        ln2(fw.ln2_w, fw.ln2_b),
        smsa(fw.attn, heads),
        mlp(fw.mlp),
        pre(build, dim, width, kernel, prefix + ".adapter3d_pre"),
        mid(build, dim, width, kernel, prefix + ".adapter3d_mid"),
        dp_pre(build.drop_path_rate),
        dp_attn(build.drop_path_rate),
        dp_mid(build.drop_path_rate),
        dp_mlp(build.drop_path_rate) {}

  Tensor bottleneck3d(Adapter3d& a, const Tensor& x) {
    return a.up.forward(a.conv.forward(a.down.forward(x)));
  }
  Tensor bottleneck3d_backward(Adapter3d& a, const Tensor& g) {
    return a.down.backward(a.conv.backward(a.up.backward(g)));
  }

  Tensor forward(const Tensor& x, bool training, Rng* rng) {
    Tensor x1 = x;
    x1 += dp_pre.apply(bottleneck3d(pre, x), training, rng);
    Tensor y = x1;
    y += dp_attn.apply(smsa.forward(ln1.forward(x1)), training, rng);
    Tensor x2 = y;
    x2 += dp_mid.apply(bottleneck3d(mid, y), training, rng);
    Tensor out = x2;
    out += dp_mlp.apply(mlp.forward(ln2.forward(x2)), training, rng);
    return out;
  }

  Tensor backward(const Tensor& g) {
    Tensor gx2 = g;
    gx2 += ln2.backward(mlp.backward(dp_mlp.grad(g)));
    Tensor gy = gx2;
    gy += bottleneck3d_backward(mid, dp_mid.grad(gx2));
    Tensor gx1 = gy;
    gx1 += ln1.backward(smsa.backward(dp_attn.grad(gy)));
    Tensor gx = gx1;
    gx += bottleneck3d_backward(pre, dp_pre.grad(gx1));
    return gx;
  }

  void tunable_params(std::vector<ParamPtr>& out) const {
    pre.params(out);
    mid.params(out);
  }
};

// ---------------------------------------------------------------------------
// Dual-Path block pair: a per-frame spatial stream with parallel adapters on
// the norm side-outputs, and a grid-frameset temporal stream with serial
// adapters on the MSA/MLP outputs (plus an optional parallel joint adapter at
// the MLP stage; with it the tuned-parameter total matches the reported
// count at both model scales).
struct DualPathBlock {
  // spatial stream
  LayerNorm s_ln1, s_ln2;
  SpatialAttention s_msa;
  Mlp s_mlp;
  Adapter s_adapter_attn, s_adapter_mlp;  // bottleneck-only
  BranchDrop s_dp_attn, s_dp_attn_ad, s_dp_mlp, s_dp_mlp_ad;
  // temporal (grid) stream
  LayerNorm t_ln1, t_ln2;
  SpatialAttention t_msa;
  Mlp t_mlp;
  Adapter t_adapter_attn, t_adapter_mlp;  // serial, keep inner residual
  Adapter t_adapter_joint;                // optional, bottleneck-only
  bool with_joint = true;
  BranchDrop t_dp_attn, t_dp_mlp, t_dp_joint;

  DualPathBlock(Build& build, const FrozenBlockWeights& fw, int64_t dim, int64_t heads,
                int64_t width, bool joint, const std::string& prefix)
      : s_ln1(fw.ln1_w, fw.ln1_b),
        s_ln2(fw.ln2_w, fw.ln2_b),
        s_msa(fw.attn, heads),
        s_mlp(fw.mlp),
        s_adapter_attn(build, dim, width, prefix + ".spath.adapter_attn", false),
        s_adapter_mlp(build, dim, width, prefix + ".spath.adapter_mlp", false),
        s_dp_attn(build.drop_path_rate),
        s_dp_attn_ad(build.drop_path_rate),
        s_dp_mlp(build.drop_path_rate),
        s_dp_mlp_ad(build.drop_path_rate),
        t_ln1(fw.ln1_w, fw.ln1_b),
        t_ln2(fw.ln2_w, fw.ln2_b),
        t_msa(fw.attn, heads),
        t_mlp(fw.mlp),
        t_adapter_attn(build, dim, width, prefix + ".tpath.adapter_attn", true),
        t_adapter_mlp(build, dim, width, prefix + ".tpath.adapter_mlp", true),
        t_adapter_joint(build, dim, width, prefix + ".tpath.adapter_joint", false),
        with_joint(joint),
        t_dp_attn(build.drop_path_rate),
        t_dp_mlp(build.drop_path_rate),
        t_dp_joint(build.drop_path_rate) {}

  std::pair<Tensor, Tensor> forward(const Tensor& xs, const Tensor& xt, bool training, Rng* rng) {
    // spatial path, Eq-style side outputs: X' = X + MSA(LN(X)) + phi(LN(X))
    Tensor s1 = s_ln1.forward(xs);
    Tensor xs1 = xs;
    xs1 += s_dp_attn.apply(s_msa.forward(s1), training, rng);
    xs1 += s_dp_attn_ad.apply(s_adapter_attn.bottleneck(s1), training, rng);
    Tensor s2 = s_ln2.forward(xs1);
    Tensor xs2 = xs1;
    xs2 += s_dp_mlp.apply(s_mlp.forward(s2), training, rng);
    xs2 += s_dp_mlp_ad.apply(s_adapter_mlp.bottleneck(s2), training, rng);

    // temporal path: adapters on top of MSA / MLP outputs
    Tensor xt1 = xt;
    xt1 += t_dp_attn.apply(t_adapter_attn.forward(t_msa.forward(t_ln1.forward(xt))), training,
                           rng);
    Tensor m = t_ln2.forward(xt1);
    Tensor xt2 = xt1;
    xt2 += t_dp_mlp.apply(t_adapter_mlp.forward(t_mlp.forward(m)), training, rng);
    if (with_joint) xt2 += t_dp_joint.apply(t_adapter_joint.bottleneck(m), training, rng);
    return {xs2, xt2};
  }

  std::pair<Tensor, Tensor> backward(const Tensor& gs, const Tensor& gt) {
    // temporal path
    Tensor gm = t_mlp.backward(t_adapter_mlp.backward(t_dp_mlp.grad(gt)));
    if (with_joint) gm += t_adapter_joint.bottleneck_backward(t_dp_joint.grad(gt));
    Tensor gxt1 = gt;
    gxt1 += t_ln2.backward(gm);
    Tensor gxt = gxt1;
    gxt += t_ln1.backward(t_msa.backward(t_adapter_attn.backward(t_dp_attn.grad(gxt1))));

    // spatial path
    Tensor gs2 = s_mlp.backward(s_dp_mlp.grad(gs));
    gs2 += s_adapter_mlp.bottleneck_backward(s_dp_mlp_ad.grad(gs));
    Tensor gxs1 = gs;
    gxs1 += s_ln2.backward(gs2);
    Tensor gs1 = s_msa.backward(s_dp_attn.grad(gxs1));
    gs1 += s_adapter_attn.bottleneck_backward(s_dp_attn_ad.grad(gxs1));
    Tensor gxs = gxs1;
    gxs += s_ln1.backward(gs1);
    return {gxs, gxt};
  }

  void tunable_params(std::vector<ParamPtr>& out) const {
    s_adapter_attn.params(out);
    s_adapter_mlp.params(out);
    t_adapter_attn.params(out);
    t_adapter_mlp.params(out);
    if (with_joint) t_adapter_joint.params(out);
  }
};

// ---------------------------------------------------------------------------
// STA block: AIM's structure with the Spatial-Temporal Adaptation module in
// place of the temporal adapter.
//   X_t  = X   + STA(T-MSA(LN1(X)))
//   X_s  = X_t + phi_s(MSA(LN1(X_t)))
//   X_st = X_s + MLP(LN2(X_s)) + phi_mlp(LN2(X_s))
struct StaBlock {
  LayerNorm ln1_t, ln1_s, ln2;
  TemporalAttention tmsa;
  SpatialAttention smsa;
  Mlp mlp;
  Sta sta;
  Adapter adapter_s, adapter_mlp;
  BranchDrop dp_t, dp_s, dp_mlp, dp_joint;

  StaBlock(Build& build, const FrozenBlockWeights& fw, int64_t dim, int64_t heads, int64_t width,
           int64_t frames, const std::vector<int64_t>& k_values, const std::string& prefix)
      : ln1_t(fw.ln1_w, fw.ln1_b),
        ln1_s(fw.ln1_w, fw.ln1_b),
        ln2(fw.ln2_w, fw.ln2_b),
        tmsa(fw.attn, heads),
        smsa(fw.attn, heads),
        mlp(fw.mlp),
        sta(build, dim, width, frames, k_values, prefix + ".sta"),
        adapter_s(build, dim, width, prefix + ".adapter_s", true),
        adapter_mlp(build, dim, width, prefix + ".adapter_mlp", false),
        dp_t(build.drop_path_rate),
        dp_s(build.drop_path_rate),
        dp_mlp(build.drop_path_rate),
        dp_joint(build.drop_path_rate) {}

  Tensor forward(const Tensor& x, bool training, Rng* rng) {
    Tensor xt = x;
    xt += dp_t.apply(sta.forward(tmsa.forward(ln1_t.forward(x))), training, rng);
    Tensor xs = xt;
    xs += dp_s.apply(adapter_s.forward(smsa.forward(ln1_s.forward(xt))), training, rng);
    Tensor m = ln2.forward(xs);
    Tensor out = xs;
    out += dp_mlp.apply(mlp.forward(m), training, rng);
    out += dp_joint.apply(adapter_mlp.bottleneck(m), training, rng);
    return out;
  }

  Tensor backward(const Tensor& g) {
    Tensor gm = mlp.backward(dp_mlp.grad(g));
    gm += adapter_mlp.bottleneck_backward(dp_joint.grad(g));
    Tensor gxs = g;
    gxs += ln2.backward(gm);
    Tensor gxt = gxs;
    gxt += ln1_s.backward(smsa.backward(adapter_s.backward(dp_s.grad(gxs))));
    Tensor gx = gxt;
    gx += ln1_t.backward(tmsa.backward(sta.backward(dp_t.grad(gxt))));
    return gx;
  }

  void tunable_params(std::vector<ParamPtr>& out) const {
    sta.params(out);
    adapter_s.params(out);
    adapter_mlp.params(out);
  }
};

// ---------------------------------------------------------------------------
// Parameter partition

/// Every parameter lands in exactly one of the two maps. `tuned/all` follows
/// the reporting convention of the comparison tables: adapters count as
/// tuned, the decoder head is accounted separately.
struct ParameterPartition {
  std::map<std::string, int64_t> tunable;
  std::map<std::string, int64_t> frozen;
  int64_t tuned_adapter_count = 0;
  int64_t tuned_head_count = 0;
  int64_t frozen_count = 0;

  int64_t tuned_count() const { return tuned_adapter_count + tuned_head_count; }
  int64_t all_count() const { return tuned_count() + frozen_count; }
  /// tuned/all in the paper's table convention (head excluded from both).
  int64_t report_tuned() const { return tuned_adapter_count; }
  int64_t report_all() const { return tuned_adapter_count + frozen_count; }
};

inline bool is_head_param(const std::string& name) { return name.rfind("head.", 0) == 0; }

inline ParameterPartition partition_from(const std::vector<ParamPtr>& params) {
  ParameterPartition part;
  for (const auto& p : params) {
    if (p->trainable) {
      part.tunable[p->name] = p->count();
      if (is_head_param(p->name))
        part.tuned_head_count += p->count();
      else
        part.tuned_adapter_count += p->count();
    } else {
      part.frozen[p->name] = p->count();
      part.frozen_count += p->count();
    }
  }
  return part;
}

}  // namespace surgpetl
