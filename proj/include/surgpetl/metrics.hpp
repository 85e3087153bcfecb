#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "surgpetl/errors.hpp"

namespace surgpetl {

/// Per-frame phase labels for one video, at 1 fps unless stated otherwise.
struct PhaseSequence {
  std::string video_id;
  std::vector<int> labels;
};

struct EvalPair {
  PhaseSequence gt;
  PhaseSequence pred;

  void check() const {
    if (gt.labels.size() != pred.labels.size())
      throw LengthMismatch("gt has " + std::to_string(gt.labels.size()) + " frames, pred has " +
                           std::to_string(pred.labels.size()));
    if (gt.labels.empty()) throw EmptyInput("empty sequence for video " + gt.video_id);
  }
};

/// Per-video metric values in percent. Cells without support (0/0) are
/// excluded from the phase average, mirroring common Cholec80 practice.
struct VideoMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double jaccard = 0.0;
  double f1 = 0.0;
  int64_t frames = 0;
  int64_t correct = 0;
};

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample std (n-1); 0 for a single video
};

struct MetricReport {
  MeanStd accuracy, precision, recall, jaccard, f1;
  double image_level_accuracy = 0.0;  // pooled over all frames of all videos
  int64_t videos = 0;
};

// ---------------------------------------------------------------------------
// Relaxed evaluation

/// Boundary forgiveness: around every ground-truth transition, predictions
/// within `window_s * fps` frames that name the phase on the *other* side of
/// that transition are rewritten to the local ground truth. Idempotent, and
/// never lowers any metric (rewrites only turn wrong frames correct).
inline EvalPair relax(const EvalPair& pair, double window_s, double fps) {
  pair.check();
  EvalPair out = pair;
  const int64_t n = static_cast<int64_t>(pair.gt.labels.size());
  const int64_t w = static_cast<int64_t>(std::llround(window_s * fps));
  if (w <= 0) return out;
  for (int64_t t = 1; t < n; ++t) {
    const int before = pair.gt.labels[static_cast<size_t>(t - 1)];
    const int after = pair.gt.labels[static_cast<size_t>(t)];
    if (before == after) continue;
    const int64_t lo = std::max<int64_t>(0, t - w);
    const int64_t hi = std::min<int64_t>(n - 1, t + w - 1);
    for (int64_t i = lo; i <= hi; ++i) {
      const int other = i < t ? after : before;
      if (out.pred.labels[static_cast<size_t>(i)] == other)
        out.pred.labels[static_cast<size_t>(i)] = pair.gt.labels[static_cast<size_t>(i)];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Frame and phase level metrics

inline double video_accuracy(const EvalPair& pair) {
  pair.check();
  const size_t n = pair.gt.labels.size();
  size_t correct = 0;
  for (size_t i = 0; i < n; ++i)
    if (pair.gt.labels[i] == pair.pred.labels[i]) ++correct;
  return 100.0 * double(correct) / double(n);
}

/// Phase-averaged precision/recall/Jaccard/F1 for one video. A metric cell
/// with an empty denominator is skipped for that phase's contribution.
inline VideoMetrics phase_metrics(const EvalPair& pair) {
  pair.check();
  const size_t n = pair.gt.labels.size();
  std::set<int> phases;
  for (size_t i = 0; i < n; ++i) {
    phases.insert(pair.gt.labels[i]);
    phases.insert(pair.pred.labels[i]);
  }

  double p_sum = 0, r_sum = 0, j_sum = 0, f_sum = 0;
  int p_n = 0, r_n = 0, j_n = 0, f_n = 0;
  for (int phase : phases) {
    int64_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < n; ++i) {
      const bool g = pair.gt.labels[i] == phase;
      const bool q = pair.pred.labels[i] == phase;
      if (g && q) ++tp;
      else if (!g && q) ++fp;
      else if (g && !q) ++fn;
    }
    if (tp + fp > 0) {
      p_sum += 100.0 * double(tp) / double(tp + fp);
      ++p_n;
    }
    if (tp + fn > 0) {
      r_sum += 100.0 * double(tp) / double(tp + fn);
      ++r_n;
    }
    if (tp + fp + fn > 0) {
      j_sum += 100.0 * double(tp) / double(tp + fp + fn);
      ++j_n;
      f_sum += 100.0 * double(2 * tp) / double(2 * tp + fp + fn);
      ++f_n;
    }
  }

  VideoMetrics m;
  m.frames = static_cast<int64_t>(n);
  for (size_t i = 0; i < n; ++i)
    if (pair.gt.labels[i] == pair.pred.labels[i]) ++m.correct;
  m.accuracy = 100.0 * double(m.correct) / double(n);
  m.precision = p_n ? p_sum / p_n : 0.0;
  m.recall = r_n ? r_sum / r_n : 0.0;
  m.jaccard = j_n ? j_sum / j_n : 0.0;
  m.f1 = f_n ? f_sum / f_n : 0.0;
  return m;
}

inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  const size_t n = xs.size();
  if (n == 0) throw EmptyInput("mean over no videos");
  double sum = 0;
  for (double x : xs) sum += x;
  out.mean = sum / double(n);
  if (n > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stddev = std::sqrt(ss / double(n - 1));
  }
  return out;
}

/// Mean +/- sample std over videos, plus pooled image-level accuracy (which
/// weights videos by frame count, unlike the video-accuracy mean).
inline MetricReport aggregate(const std::vector<VideoMetrics>& per_video) {
  if (per_video.empty()) throw EmptyInput("no videos to aggregate");
  std::vector<double> acc, pre, rec, jac, f1;
  int64_t frames = 0, correct = 0;
  for (const auto& m : per_video) {
    acc.push_back(m.accuracy);
    pre.push_back(m.precision);
    rec.push_back(m.recall);
    jac.push_back(m.jaccard);
    f1.push_back(m.f1);
    frames += m.frames;
    correct += m.correct;
  }
  MetricReport r;
  r.accuracy = mean_std(acc);
  r.precision = mean_std(pre);
  r.recall = mean_std(rec);
  r.jaccard = mean_std(jac);
  r.f1 = mean_std(f1);
  r.image_level_accuracy = 100.0 * double(correct) / double(frames);
  r.videos = static_cast<int64_t>(per_video.size());
  return r;
}

inline MetricReport evaluate_pairs(const std::vector<EvalPair>& pairs, bool relaxed,
                                   double window_s = 10.0, double fps = 1.0) {
  std::vector<VideoMetrics> per_video;
  per_video.reserve(pairs.size());
  for (const auto& p : pairs)
    per_video.push_back(phase_metrics(relaxed ? relax(p, window_s, fps) : p));
  return aggregate(per_video);
}

}  // namespace surgpetl
