#pragma once

#include <cmath>
#include <cstdint>

namespace surgpetl {

struct TrainConfig {
  int64_t epochs = 30;
  int64_t batch_size = 64;
  double base_lr = 3e-4;
  double warmup_start_lr = 1e-6;
  int64_t warmup_epochs = 3;
  double weight_decay = 5e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double head_lr_multiplier = 10.0;
  uint64_t seed = 0;
};

/// Linear warmup from warmup_start_lr to base_lr over the warmup epochs,
/// then cosine decay to zero at the final step. Both pieces meet at base_lr,
/// so the schedule is continuous at the junction.
inline double lr_at(int64_t step, const TrainConfig& cfg, int64_t steps_per_epoch) {
  const int64_t warmup_steps = cfg.warmup_epochs * steps_per_epoch;
  const int64_t total_steps = cfg.epochs * steps_per_epoch;
  if (step <= 0 && warmup_steps > 0) return cfg.warmup_start_lr;
  if (step < warmup_steps) {
    const double frac = double(step) / double(warmup_steps);
    return cfg.warmup_start_lr + (cfg.base_lr - cfg.warmup_start_lr) * frac;
  }
  if (step >= total_steps) return 0.0;
  const double progress = double(step - warmup_steps) / double(total_steps - warmup_steps);
  return cfg.base_lr * 0.5 * (1.0 + std::cos(M_PI * progress));
}

inline double head_lr_at(int64_t step, const TrainConfig& cfg, int64_t steps_per_epoch) {
  return cfg.head_lr_multiplier * lr_at(step, cfg, steps_per_epoch);
}

}  // namespace surgpetl
