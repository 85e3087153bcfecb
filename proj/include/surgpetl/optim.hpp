#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "surgpetl/blocks.hpp"
#include "surgpetl/nn.hpp"
#include "surgpetl/schedule.hpp"

namespace surgpetl {

/// Decoupled-weight-decay Adam over the tunable partition only. The decoder
/// head group runs at head_lr_multiplier times the base rate. Decay skips
/// biases, norm gains and router scalars (anything with fewer than 2 dims).
class AdamW {
 public:
  AdamW(std::vector<ParamPtr> params, const TrainConfig& cfg) : cfg_(cfg) {
    for (auto& p : params) {
      if (!p->trainable) continue;
      Slot s;
      s.param = p;
      s.m.assign(p->value.size(), 0.0);
      s.v.assign(p->value.size(), 0.0);
      s.lr_scale = is_head_param(p->name) ? cfg.head_lr_multiplier : 1.0;
      s.decay = p->shape.size() >= 2;
      slots_.push_back(std::move(s));
    }
  }

  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, double(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, double(t_));
    for (auto& s : slots_) {
      Parameter& p = *s.param;
      const double group_lr = lr * s.lr_scale;
      for (size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * g;
        s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = s.m[i] / bc1;
        const double vhat = s.v[i] / bc2;
        if (s.decay) p.value[i] -= group_lr * cfg_.weight_decay * p.value[i];
        p.value[i] -= group_lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps);
      }
    }
  }

  int64_t steps_taken() const { return t_; }

  std::vector<std::string> touched_names() const {
    std::vector<std::string> names;
    for (const auto& s : slots_) names.push_back(s.param->name);
    return names;
  }

  /// Verifies the optimizer's parameter set is exactly the tunable side of
  /// the partition; run once per epoch by the trainer.
  bool matches_partition(const ParameterPartition& part) const {
    if (slots_.size() != part.tunable.size()) return false;
    for (const auto& s : slots_)
      if (part.tunable.find(s.param->name) == part.tunable.end()) return false;
    return true;
  }

  // state access for checkpointing
  struct Slot {
    ParamPtr param;
    std::vector<double> m, v;
    double lr_scale = 1.0;
    bool decay = true;
  };
  std::vector<Slot>& slots() { return slots_; }
  void set_steps_taken(int64_t t) { t_ = t; }

 private:
  TrainConfig cfg_;
  std::vector<Slot> slots_;
  int64_t t_ = 0;
};

}  // namespace surgpetl
