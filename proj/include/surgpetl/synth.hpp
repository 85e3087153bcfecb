#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "surgpetl/dataset.hpp"
#include "surgpetl/rng.hpp"
#include "surgpetl/tensor.hpp"

namespace surgpetl {

/// Desk-scale stand-in for a surgical-phase dataset. Phase segments are
/// contiguous and ordered (phase 0, then 1, ...), mimicking the monotone
/// phase structure of a procedure.
///
/// Two signal modes:
///  - appearance: each phase has a distinct base color, so a single frame
///    identifies the phase (plus pixel noise).
///  - temporal: every frame is a noise pattern from the same distribution;
///    phase 0 repeats its pattern with period `temporal_period` while phase 1
///    draws a fresh pattern per frame. No single frame carries the phase --
///    only frame-order structure does.
struct SynthSpec {
  int64_t num_videos = 20;
  int64_t min_length = 64;
  int64_t max_length = 64;
  int64_t num_phases = 2;
  int64_t image_size = 16;
  double noise = 0.05;
  double transition_noise = 0.1;  // relative jitter of segment boundaries
  std::vector<double> phase_proportions;  // empty -> uniform
  enum class Signal { kAppearance, kTemporal } signal = Signal::kAppearance;
  int64_t temporal_period = 4;
};

inline std::vector<double> phase_palette(int64_t phase) {
  // distinct, well separated base colors
  static const double palette[][3] = {
      {0.85, 0.25, 0.25}, {0.25, 0.65, 0.85}, {0.30, 0.80, 0.35}, {0.85, 0.75, 0.25},
      {0.65, 0.35, 0.80}, {0.90, 0.50, 0.20}, {0.35, 0.80, 0.75}, {0.55, 0.55, 0.55},
      {0.20, 0.30, 0.70}, {0.75, 0.30, 0.55},
  };
  const auto& c = palette[phase % 10];
  return {c[0], c[1], c[2]};
}

/// Ordered contiguous segments whose lengths follow the requested
/// proportions, with multiplicative jitter on the boundaries.
inline std::vector<int> synth_labels(int64_t length, const SynthSpec& spec, Rng& rng) {
  std::vector<double> props = spec.phase_proportions;
  if (props.empty()) props.assign(static_cast<size_t>(spec.num_phases), 1.0);
  double total = 0.0;
  std::vector<double> jittered(props.size());
  for (size_t p = 0; p < props.size(); ++p) {
    const double j = 1.0 + spec.transition_noise * rng.uniform(-1.0, 1.0);
    jittered[p] = std::max(1e-6, props[p] * j);
    total += jittered[p];
  }
  std::vector<int> labels(static_cast<size_t>(length));
  int64_t cursor = 0;
  for (size_t p = 0; p < jittered.size(); ++p) {
    int64_t seg = static_cast<int64_t>(std::llround(double(length) * jittered[p] / total));
    seg = std::max<int64_t>(1, seg);
    if (p + 1 == jittered.size()) seg = length - cursor;
    for (int64_t i = 0; i < seg && cursor < length; ++i, ++cursor)
      labels[static_cast<size_t>(cursor)] = static_cast<int>(p);
  }
  while (cursor < length) labels[static_cast<size_t>(cursor++)] = spec.num_phases - 1;
  return labels;
}

inline Tensor noise_pattern(int64_t size, Rng& rng) {
  Tensor t({3, size, size});
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(0.2, 0.8);
  return t;
}

inline LoadedVideo synth_video(const SynthSpec& spec, const std::string& id, Rng& rng) {
  LoadedVideo v;
  v.id = id;
  const int64_t length = spec.min_length == spec.max_length
                             ? spec.min_length
                             : rng.uniform_int(spec.min_length, spec.max_length);
  v.labels = synth_labels(length, spec, rng);
  v.frames.reserve(static_cast<size_t>(length));

  if (spec.signal == SynthSpec::Signal::kAppearance) {
    for (int64_t t = 0; t < length; ++t) {
      const auto base = phase_palette(v.labels[static_cast<size_t>(t)]);
      Tensor frame({3, spec.image_size, spec.image_size});
      for (int64_t c = 0; c < 3; ++c)
        for (int64_t y = 0; y < spec.image_size; ++y)
          for (int64_t x = 0; x < spec.image_size; ++x) {
            double val = base[static_cast<size_t>(c)] + spec.noise * rng.uniform(-1.0, 1.0);
            frame.at(c, y, x) = std::min(1.0, std::max(0.0, val));
          }
      v.frames.push_back(std::move(frame));
    }
    return v;
  }

  // temporal mode: pattern repetition structure distinguishes phases
  std::vector<Tensor> cycle;
  int64_t segment_start = 0;
  for (int64_t t = 0; t < length; ++t) {
    const int phase = v.labels[static_cast<size_t>(t)];
    if (t == 0 || phase != v.labels[static_cast<size_t>(t - 1)]) {
      segment_start = t;
      cycle.clear();
      for (int64_t i = 0; i < spec.temporal_period; ++i)
        cycle.push_back(noise_pattern(spec.image_size, rng));
    }
    Tensor base = (phase % 2 == 0)
                      ? cycle[static_cast<size_t>((t - segment_start) % spec.temporal_period)]
                      : noise_pattern(spec.image_size, rng);
    for (int64_t i = 0; i < base.numel(); ++i) {
      double val = base[i] + spec.noise * rng.uniform(-1.0, 1.0);
      base[i] = std::min(1.0, std::max(0.0, val));
    }
    v.frames.push_back(std::move(base));
  }
  return v;
}

inline std::vector<LoadedVideo> generate_synth_memory(const SynthSpec& spec, uint64_t seed) {
  Rng rng(seed);
  std::vector<LoadedVideo> videos;
  for (int64_t i = 0; i < spec.num_videos; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "video%03lld", static_cast<long long>(i));
    videos.push_back(synth_video(spec, buf, rng));
  }
  return videos;
}

/// Writes frames and annotation TSVs under root; deterministic in the seed.
inline std::vector<std::string> generate_synth(const SynthSpec& spec, uint64_t seed,
                                               const std::string& root) {
  auto videos = generate_synth_memory(spec, seed);
  fs::create_directories(root);
  std::vector<std::string> ids;
  for (const auto& v : videos) {
    const fs::path dir = fs::path(root) / v.id;
    fs::create_directories(dir);
    for (size_t i = 0; i < v.frames.size(); ++i)
      write_ppm(v.frames[i], (dir / frame_filename(static_cast<int64_t>(i))).string());
    std::ofstream tsv(fs::path(root) / (v.id + ".tsv"));
    if (!tsv) throw IOError("cannot write annotations for " + v.id);
    for (size_t i = 0; i < v.labels.size(); ++i) tsv << i << "\t" << v.labels[i] << "\n";
    ids.push_back(v.id);
  }
  return ids;
}

}  // namespace surgpetl
