#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "surgpetl/nn.hpp"
#include "surgpetl/rng.hpp"
#include "surgpetl/tensor.hpp"

namespace surgpetl::test {

inline Tensor random_tensor(std::vector<int64_t> shape, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

/// Scalar probe loss: a fixed random weighting of the output tensor, so
/// dL/dout equals the weight tensor and the full Jacobian gets exercised.
struct ProbeLoss {
  Tensor weights;

  explicit ProbeLoss(const Tensor& out_like, Rng& rng)
      : weights(random_tensor(out_like.shape(), rng)) {}

  double value(const Tensor& out) const {
    double acc = 0.0;
    for (int64_t i = 0; i < out.numel(); ++i) acc += weights[i] * out[i];
    return acc;
  }
  Tensor grad() const { return weights; }
};

/// Central finite differences on one parameter element.
inline double numeric_grad(Parameter& p, size_t idx, const std::function<double()>& loss,
                           double step = 1e-5) {
  const double orig = p.value[idx];
  p.value[idx] = orig + step;
  const double lp = loss();
  p.value[idx] = orig - step;
  const double lm = loss();
  p.value[idx] = orig;
  return (lp - lm) / (2.0 * step);
}

/// Checks every element of every parameter against central differences.
/// Returns the worst relative error seen.
inline double check_param_grads(const std::vector<ParamPtr>& params,
                                const std::function<double()>& loss, double step = 1e-5) {
  double worst = 0.0;
  for (const auto& p : params) {
    if (!p->trainable) continue;
    for (size_t i = 0; i < p->value.size(); ++i) {
      const double numeric = numeric_grad(*p, i, loss, step);
      const double analytic = p->grad[i];
      const double denom = std::max({1.0, std::fabs(numeric), std::fabs(analytic)});
      worst = std::max(worst, std::fabs(numeric - analytic) / denom);
    }
  }
  return worst;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
  return worst;
}

}  // namespace surgpetl::test
