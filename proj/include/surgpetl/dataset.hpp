#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "surgpetl/errors.hpp"
#include "surgpetl/tensor.hpp"

namespace surgpetl {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Frame image IO. Frames live as binary PPM (P6), values quantized to 8 bit;
// tensors hold (C,H,W) in [0,1].

inline void write_ppm(const Tensor& frame, const std::string& path) {
  if (frame.ndim() != 3 || frame.dim(0) != 3) throw IOError("write_ppm expects (3,H,W)");
  const int64_t h = frame.dim(1), w = frame.dim(2);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IOError("cannot write '" + path + "'");
  os << "P6\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(w * 3));
  for (int64_t y = 0; y < h; ++y) {
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < 3; ++c) {
        double v = frame.at(c, y, x);
        v = std::min(1.0, std::max(0.0, v));
        row[static_cast<size_t>(x * 3 + c)] =
            static_cast<unsigned char>(std::llround(v * 255.0));
      }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw IOError("short write to '" + path + "'");
}

inline Tensor read_ppm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IOError("cannot open '" + path + "'");
  std::string magic;
  is >> magic;
  if (magic != "P6") throw IOError("'" + path + "' is not a binary PPM");
  auto next_int = [&is, &path]() {
    // skip whitespace and '#' comments
    for (;;) {
      int ch = is.peek();
      if (ch == '#') {
        std::string line;
        std::getline(is, line);
      } else if (std::isspace(ch)) {
        is.get();
      } else {
        break;
      }
    }
    int64_t v;
    if (!(is >> v)) throw IOError("bad PPM header in '" + path + "'");
    return v;
  };
  const int64_t w = next_int(), h = next_int(), maxval = next_int();
  if (maxval != 255) throw IOError("unsupported PPM maxval in '" + path + "'");
  is.get();  // single whitespace after header
  std::vector<unsigned char> raw(static_cast<size_t>(w * h * 3));
  is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!is) throw IOError("truncated PPM '" + path + "'");
  Tensor frame({3, h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < 3; ++c)
        frame.at(c, y, x) = double(raw[static_cast<size_t>((y * w + x) * 3 + c)]) / 255.0;
  return frame;
}

// ---------------------------------------------------------------------------
// Video source abstraction: a directory of per-frame images
// {root}/{video_id}/{frame_idx:06d}.ppm at 1 fps, plus {root}/{video_id}.tsv
// with lines `frame_idx<TAB>phase_id`.

struct LoadedVideo {
  std::string id;
  std::vector<int> labels;
  std::vector<Tensor> frames;

  int64_t length() const { return static_cast<int64_t>(labels.size()); }
};

inline std::string frame_filename(int64_t idx) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06lld.ppm", static_cast<long long>(idx));
  return buf;
}

inline std::vector<int> read_annotation_tsv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IOError("cannot open annotation '" + path + "'");
  std::vector<std::pair<int64_t, int>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    int64_t idx;
    int phase;
    if (!(ss >> idx >> phase)) throw IOError("bad annotation line '" + line + "' in " + path);
    rows.emplace_back(idx, phase);
  }
  std::sort(rows.begin(), rows.end());
  std::vector<int> labels(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].first != static_cast<int64_t>(i))
      throw IOError("annotation frames not contiguous in " + path);
    labels[i] = rows[i].second;
  }
  return labels;
}

inline LoadedVideo load_video(const std::string& root, const std::string& video_id) {
  LoadedVideo v;
  v.id = video_id;
  v.labels = read_annotation_tsv((fs::path(root) / (video_id + ".tsv")).string());
  v.frames.reserve(v.labels.size());
  for (size_t i = 0; i < v.labels.size(); ++i)
    v.frames.push_back(
        read_ppm((fs::path(root) / video_id / frame_filename(static_cast<int64_t>(i))).string()));
  return v;
}

inline std::vector<std::string> list_videos(const std::string& root) {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) ids.push_back(entry.path().filename().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline std::vector<LoadedVideo> load_dataset(const std::string& root) {
  std::vector<LoadedVideo> out;
  for (const auto& id : list_videos(root)) out.push_back(load_video(root, id));
  if (out.empty()) throw IOError("no videos under '" + root + "'");
  return out;
}

}  // namespace surgpetl
