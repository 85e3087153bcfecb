#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "surgpetl/checkpoint.hpp"
#include "surgpetl/dataset.hpp"
#include "surgpetl/metrics.hpp"
#include "surgpetl/model.hpp"
#include "surgpetl/optim.hpp"
#include "surgpetl/sampling.hpp"
#include "surgpetl/schedule.hpp"

namespace surgpetl {

/// Materializes the causal clip for one target frame: gathers the sampled
/// frames into a (T,C,H,W) volume.
inline FrameVolume make_volume(const LoadedVideo& video, int64_t target, const ClipSpec& spec) {
  FrameVolume vol;
  vol.target_index = target;
  vol.indices = sample_clip(video.length(), target, spec);
  const Tensor& first = video.frames[static_cast<size_t>(vol.indices[0])];
  vol.pixels = Tensor({spec.frames, first.dim(0), first.dim(1), first.dim(2)});
  for (int64_t j = 0; j < spec.frames; ++j) {
    const Tensor& f = video.frames[static_cast<size_t>(vol.indices[static_cast<size_t>(j)])];
    std::copy(f.data(), f.data() + f.numel(), vol.pixels.data() + j * f.numel());
  }
  return vol;
}

/// Dual-path temporal input: its own clip spec (by default 16 frames at
/// interval 2) tiled into one grid frameset.
inline GridFrameset make_grid_input(const LoadedVideo& video, int64_t target,
                                    const ModelConfig& cfg) {
  ClipSpec grid_spec{cfg.dual_path_grid_frames, cfg.dual_path_grid_interval, 1.0};
  auto indices = sample_clip(video.length(), target, grid_spec);
  std::vector<Tensor> frames;
  frames.reserve(indices.size());
  for (int64_t idx : indices) frames.push_back(video.frames[static_cast<size_t>(idx)]);
  return build_grid(frames, indices, cfg.dual_path_grid);
}

// ---------------------------------------------------------------------------
// Training

struct TrainSample {
  int video = 0;
  int64_t target = 0;
};

struct EpochStats {
  double mean_loss = 0.0;
  double first_loss = 0.0;
  double last_lr = 0.0;
};

class Trainer {
 public:
  Trainer(Model& model, const std::vector<LoadedVideo>& data, const TrainConfig& tcfg,
          int64_t steps_per_epoch)
      : model_(model),
        data_(data),
        tcfg_(tcfg),
        steps_per_epoch_(steps_per_epoch),
        opt_(model.tunable_parameters(), tcfg),
        sample_rng_(tcfg.seed + 17) {}

  /// One optimizer step over a freshly sampled batch. Loss is the mean
  /// cross-entropy on the targets' logits; only tunable parameters move.
  double train_step() {
    const auto& clip = model_.config().clip;
    model_.zero_grads();
    double loss_sum = 0.0;
    for (int64_t b = 0; b < tcfg_.batch_size; ++b) {
      const TrainSample s = draw_sample();
      const LoadedVideo& video = data_[static_cast<size_t>(s.video)];
      FrameVolume vol = make_volume(video, s.target, clip);
      Tensor logits;
      if (model_.config().model.scheme == Scheme::kDualPath) {
        GridFrameset grid = make_grid_input(video, s.target, model_.config().model);
        logits = model_.forward(vol, &grid, /*training=*/true);
      } else {
        logits = model_.forward(vol, nullptr, /*training=*/true);
      }
      Tensor dlogits;
      const double loss =
          softmax_cross_entropy(logits, video.labels[static_cast<size_t>(s.target)], &dlogits);
      dlogits *= 1.0 / double(tcfg_.batch_size);
      model_.backward(dlogits);
      loss_sum += loss;
    }
    const double loss = loss_sum / double(tcfg_.batch_size);
    if (!std::isfinite(loss))
      throw NaNLossError("non-finite loss at step " + std::to_string(global_step_) +
                         " (lr=" + std::to_string(current_lr()) + ")");
    opt_.step(current_lr());
    ++global_step_;
    return loss;
  }

  EpochStats train_epoch() {
    EpochStats stats;
    double sum = 0.0;
    for (int64_t s = 0; s < steps_per_epoch_; ++s) {
      const double loss = train_step();
      if (s == 0) stats.first_loss = loss;
      sum += loss;
    }
    stats.mean_loss = sum / double(steps_per_epoch_);
    stats.last_lr = current_lr();
    if (!opt_.matches_partition(model_.partition()))
      throw std::runtime_error("optimizer parameter set diverged from the tunable partition");
    return stats;
  }

  double current_lr() const { return lr_at(global_step_, tcfg_, steps_per_epoch_); }
  int64_t global_step() const { return global_step_; }
  AdamW& optimizer() { return opt_; }

 private:
  TrainSample draw_sample() {
    TrainSample s;
    s.video = static_cast<int>(sample_rng_.uniform_int(0, int64_t(data_.size()) - 1));
    s.target = sample_rng_.uniform_int(0, data_[static_cast<size_t>(s.video)].length() - 1);
    return s;
  }

  Model& model_;
  const std::vector<LoadedVideo>& data_;
  TrainConfig tcfg_;
  int64_t steps_per_epoch_;
  AdamW opt_;
  Rng sample_rng_;
  int64_t global_step_ = 0;
};

// ---------------------------------------------------------------------------
// Evaluation

/// Predicts every frame of a video with causal clips at the evaluation
/// interval (train/test interval mismatch is supported by passing a
/// different R here).
inline PhaseSequence evaluate_video(Model& model, const LoadedVideo& video, int64_t eval_interval) {
  ClipSpec spec = model.config().clip;
  spec.interval = eval_interval;
  PhaseSequence out;
  out.video_id = video.id;
  out.labels.reserve(static_cast<size_t>(video.length()));
  for (int64_t t = 0; t < video.length(); ++t) {
    FrameVolume vol = make_volume(video, t, spec);
    Tensor logits;
    if (model.config().model.scheme == Scheme::kDualPath) {
      GridFrameset grid = make_grid_input(video, t, model.config().model);
      logits = model.forward(vol, &grid, /*training=*/false);
    } else {
      logits = model.forward(vol, nullptr, /*training=*/false);
    }
    int best = 0;
    for (int64_t c = 1; c < logits.numel(); ++c)
      if (logits[c] > logits[best]) best = static_cast<int>(c);
    out.labels.push_back(best);
  }
  return out;
}

inline std::vector<EvalPair> evaluate_dataset(Model& model, const std::vector<LoadedVideo>& videos,
                                              int64_t eval_interval) {
  std::vector<EvalPair> pairs;
  for (const auto& v : videos) {
    EvalPair pair;
    pair.gt = {v.id, v.labels};
    pair.pred = evaluate_video(model, v, eval_interval);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Run manifests: everything a run depends on, as flat key=value text.

inline void write_manifest(const std::string& path,
                           const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream os(path);
  if (!os) throw IOError("cannot write manifest '" + path + "'");
  for (const auto& [k, v] : entries) os << k << "=" << v << "\n";
}

inline std::string data_root_from_env(const std::string& cli_value) {
  if (!cli_value.empty()) return cli_value;
  if (const char* env = std::getenv("SURGPETL_DATA_ROOT")) return env;
  throw IOError("no data root: pass --data or set SURGPETL_DATA_ROOT");
}

// ---------------------------------------------------------------------------
// Checkpointing with optimizer state (resumable training)

inline void save_training_state(Model& model, AdamW& opt, const std::string& path) {
  NamedTensorMap map = snapshot_params(model.parameters());
  for (auto& slot : opt.slots()) {
    map.emplace("opt." + slot.param->name + ".m", Tensor(slot.param->shape, slot.m));
    map.emplace("opt." + slot.param->name + ".v", Tensor(slot.param->shape, slot.v));
  }
  map.emplace("opt.step", Tensor({1}, {double(opt.steps_taken())}));
  save_tensor_map(map, path);
}

inline ImportReport load_training_state(Model& model, AdamW* opt, const std::string& path) {
  NamedTensorMap map = load_tensor_map(path);
  NamedTensorMap params_only;
  for (auto& [name, tensor] : map)
    if (name.rfind("opt.", 0) != 0) params_only.emplace(name, tensor);
  ImportReport report = apply_checkpoint(model.parameters(), params_only);
  if (opt) {
    for (auto& slot : opt->slots()) {
      auto m = map.find("opt." + slot.param->name + ".m");
      auto v = map.find("opt." + slot.param->name + ".v");
      if (m != map.end()) slot.m = m->second.vec();
      if (v != map.end()) slot.v = v->second.vec();
    }
    auto st = map.find("opt.step");
    if (st != map.end()) opt->set_steps_taken(static_cast<int64_t>(st->second[0]));
  }
  return report;
}

}  // namespace surgpetl
