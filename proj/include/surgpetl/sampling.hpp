#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "surgpetl/config.hpp"
#include "surgpetl/errors.hpp"
#include "surgpetl/tensor.hpp"

namespace surgpetl {

/// A T-frame causal clip: past frames at interval R ending at the target
/// frame, whose phase is the prediction target.
struct FrameVolume {
  std::vector<int64_t> indices;   // nondecreasing, last == target_index
  int64_t target_index = 0;
  Tensor pixels;                  // (T, C, H, W), filled by the data source
};

/// Dual-Path temporal input: G*G downscaled frames tiled into one image.
struct GridFrameset {
  Tensor pixels;                      // (C, H, W), same size as a source frame
  std::vector<int64_t> source_indices;
};

/// Causal sparse sampling: indices {target - (T-1-j)*R}, clamped at zero so
/// early frames repeat the first frame. Never reaches past the target.
inline std::vector<int64_t> sample_clip(int64_t video_length, int64_t target,
                                        const ClipSpec& spec) {
  if (target < 0 || target >= video_length)
    throw DimensionError("target frame outside video");
  std::vector<int64_t> indices(static_cast<size_t>(spec.frames));
  for (int64_t j = 0; j < spec.frames; ++j) {
    const int64_t idx = target - (spec.frames - 1 - j) * spec.interval;
    indices[static_cast<size_t>(j)] = std::max<int64_t>(0, idx);
  }
  return indices;
}

/// Area-average downscale by an integer factor g in each spatial dimension.
inline Tensor downscale_area(const Tensor& frame, int64_t g) {
  if (frame.ndim() != 3) throw DimensionError("frame must be (C,H,W)");
  const int64_t c = frame.dim(0), h = frame.dim(1), w = frame.dim(2);
  if (h % g != 0 || w % g != 0) throw DimensionError("grid side must divide frame size");
  Tensor out({c, h / g, w / g});
  const double inv = 1.0 / double(g * g);
  for (int64_t ch = 0; ch < c; ++ch)
    for (int64_t i = 0; i < h / g; ++i)
      for (int64_t j = 0; j < w / g; ++j) {
        double acc = 0.0;
        for (int64_t di = 0; di < g; ++di)
          for (int64_t dj = 0; dj < g; ++dj) acc += frame.at(ch, i * g + di, j * g + dj);
        out.at(ch, i, j) = acc * inv;
      }
  return out;
}

/// Tiles T_g = G*G frames, each downscaled by G, in temporal raster order.
/// The output keeps the dimensions of the original frame.
inline GridFrameset build_grid(const std::vector<Tensor>& frames,
                               const std::vector<int64_t>& source_indices, int64_t g) {
  const int64_t tg = static_cast<int64_t>(frames.size());
  if (tg != g * g)
    throw DimensionError("grid needs G*G frames, got " + std::to_string(tg) + " for G=" +
                         std::to_string(g));
  const int64_t c = frames[0].dim(0), h = frames[0].dim(1), w = frames[0].dim(2);
  for (const auto& f : frames)
    if (f.shape() != frames[0].shape()) throw DimensionError("grid frames must share dimensions");

  GridFrameset out;
  out.source_indices = source_indices;
  out.pixels = Tensor({c, h, w});
  const int64_t ch_cell = h / g, cw_cell = w / g;
  for (int64_t i = 0; i < tg; ++i) {
    Tensor cell = downscale_area(frames[static_cast<size_t>(i)], g);
    const int64_t row = i / g, col = i % g;
    for (int64_t cc = 0; cc < c; ++cc)
      for (int64_t y = 0; y < ch_cell; ++y)
        for (int64_t x = 0; x < cw_cell; ++x)
          out.pixels.at(cc, row * ch_cell + y, col * cw_cell + x) = cell.at(cc, y, x);
  }
  return out;
}

}  // namespace surgpetl
