#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "surgpetl/errors.hpp"

namespace surgpetl {

/// Sparse clip geometry: T frames sampled at interval R, ending at the
/// target frame. fps converts the relaxed-metric window from seconds.
struct ClipSpec {
  int64_t frames = 8;      // T
  int64_t interval = 4;    // R
  double fps = 1.0;
};

struct TokenShape {
  int64_t frames = 0;   // T
  int64_t tokens = 0;   // K (excluding class token)
  int64_t dim = 0;      // D
};

enum class Scheme { kAim, kStAdapter, kDualPath, kSta };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::kAim: return "aim";
    case Scheme::kStAdapter: return "st-adapter";
    case Scheme::kDualPath: return "dual-path";
    case Scheme::kSta: return "sta";
  }
  return "?";
}

inline std::optional<Scheme> parse_scheme(const std::string& s) {
  if (s == "aim") return Scheme::kAim;
  if (s == "st-adapter" || s == "st_adapter") return Scheme::kStAdapter;
  if (s == "dual-path" || s == "dual_path") return Scheme::kDualPath;
  if (s == "sta") return Scheme::kSta;
  return std::nullopt;
}

/// Backbone scale. vit-b/vit-l match the standard checkpoints; micro is the
/// desk-scale model used by tests and smoke training runs.
struct ScaleSpec {
  std::string name;
  int64_t blocks = 0;
  int64_t dim = 0;
  int64_t heads = 0;
  int64_t mlp_ratio = 4;
};

inline std::optional<ScaleSpec> parse_scale(const std::string& s) {
  if (s == "vit-b" || s == "vit_b") return ScaleSpec{"vit-b", 12, 768, 12, 4};
  if (s == "vit-l" || s == "vit_l") return ScaleSpec{"vit-l", 24, 1024, 16, 4};
  if (s == "micro") return ScaleSpec{"micro", 4, 64, 4, 4};
  return std::nullopt;
}

struct ConvKernel {
  int64_t t = 3, h = 1, w = 1;
};

struct ModelConfig {
  std::string scale = "vit-b";
  Scheme scheme = Scheme::kAim;
  double bottleneck_ratio = 0.25;
  std::vector<int64_t> sta_k_values = {2};
  ConvKernel conv_kernel;                  // ST-Adapter depthwise conv
  int64_t st_adapter_width = 384;          // absolute bottleneck width, both scales
  int64_t num_classes = 7;
  double drop_path_rate = 0.2;
  int64_t image_size = 224;
  int64_t patch_size = 16;
  bool temporal_pos_embed = false;         // off by default
  bool dual_path_temporal_joint = true;    // third adapter in the grid path
  int64_t dual_path_grid = 4;              // G; grid frameset tiles G*G frames
  int64_t dual_path_grid_frames = 16;      // T_g
  int64_t dual_path_grid_interval = 2;
  int64_t head_hidden = 0;                 // 0 -> same as backbone dim
};

/// A ModelConfig + ClipSpec pair that passed validate_config. Carries the
/// derived quantities every module downstream relies on.
struct ValidatedConfig {
  ModelConfig model;
  ClipSpec clip;
  ScaleSpec scale;
  int64_t tokens_per_frame = 0;   // K
  int64_t adapter_width = 0;      // c = round(ratio * D)
  std::vector<int64_t> windows;   // w = T/k per configured k (STA only)
};

/// Total validation: every input yields either a config or a nonempty error
/// list. Divisibility and FR evenness invariants are enforced here so the
/// blocks can assume them.
inline std::vector<ConfigError> validate_config(const ModelConfig& cfg, const ClipSpec& clip,
                                                ValidatedConfig* out = nullptr) {
  std::vector<ConfigError> errors;
  auto bad = [&](const std::string& field, const std::string& reason) {
    errors.push_back({field, reason});
  };

  if (clip.frames < 1) bad("T", "frame count must be >= 1");
  if (clip.interval < 1) bad("R", "sampling interval must be >= 1");
  if (!(clip.fps > 0)) bad("fps", "fps must be > 0");

  auto scale = parse_scale(cfg.scale);
  if (!scale) bad("scale", "unknown scale '" + cfg.scale + "' (vit-b|vit-l|micro)");

  if (!(cfg.bottleneck_ratio > 0.0 && cfg.bottleneck_ratio <= 1.0))
    bad("bottleneck_ratio", "must lie in (0,1]");
  if (cfg.num_classes < 2) bad("num_classes", "need at least two phases");
  if (!(cfg.drop_path_rate >= 0.0 && cfg.drop_path_rate < 1.0))
    bad("drop_path_rate", "must lie in [0,1)");
  if (cfg.image_size < 1 || cfg.patch_size < 1)
    bad("image_size", "image and patch size must be positive");
  else if (cfg.image_size % cfg.patch_size != 0)
    bad("patch_size", "patch size must divide image size");
  if (cfg.conv_kernel.t < 1 || cfg.conv_kernel.h < 1 || cfg.conv_kernel.w < 1)
    bad("conv_kernel", "kernel dims must be >= 1");
  if (cfg.conv_kernel.t % 2 == 0 || cfg.conv_kernel.h % 2 == 0 || cfg.conv_kernel.w % 2 == 0)
    bad("conv_kernel", "kernel dims must be odd (same-padding)");
  if (cfg.st_adapter_width < 1) bad("st_adapter_width", "must be >= 1");

  std::vector<int64_t> windows;
  if (cfg.scheme == Scheme::kSta) {
    if (cfg.sta_k_values.empty()) bad("sta_k_values", "STA needs at least one k");
    for (int64_t k : cfg.sta_k_values) {
      if (k < 1) {
        bad("sta_k_values", "k must be >= 1");
        continue;
      }
      if (clip.frames % k != 0) {
        bad("sta_k_values", "k=" + std::to_string(k) + " does not divide T=" +
                                 std::to_string(clip.frames));
        continue;
      }
      const int64_t w = clip.frames / k;
      if (w % 2 != 0) {
        bad("sta_k_values", "window w=T/k=" + std::to_string(w) +
                                 " must be even for pairing at offset w/2");
        continue;
      }
      windows.push_back(w);
    }
  }
  if (cfg.scheme == Scheme::kDualPath) {
    if (cfg.dual_path_grid < 1) bad("dual_path_grid", "grid side must be >= 1");
    if (cfg.dual_path_grid_frames != cfg.dual_path_grid * cfg.dual_path_grid)
      bad("dual_path_grid_frames", "grid frame count must equal G*G");
    if (cfg.image_size % std::max<int64_t>(cfg.dual_path_grid, 1) != 0)
      bad("dual_path_grid", "grid side must divide image size");
  }

  if (!errors.empty()) return errors;

  if (out) {
    out->model = cfg;
    out->clip = clip;
    out->scale = *scale;
    const int64_t per_side = cfg.image_size / cfg.patch_size;
    out->tokens_per_frame = per_side * per_side;
    out->adapter_width =
        std::max<int64_t>(1, static_cast<int64_t>(std::lround(cfg.bottleneck_ratio *
                                                              double(scale->dim))));
    out->windows = windows;
  }
  return errors;
}

inline ValidatedConfig validate_or_throw(const ModelConfig& cfg, const ClipSpec& clip) {
  ValidatedConfig v;
  auto errors = validate_config(cfg, clip, &v);
  if (!errors.empty()) throw ConfigException(errors);
  return v;
}

// ---------------------------------------------------------------------------
// Flat key=value config files. Keys match the field names; unknown keys are
// reported as errors rather than ignored.

inline std::vector<int64_t> parse_int_list(const std::string& s) {
  std::vector<int64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoll(item));
  }
  return out;
}

inline std::vector<ConfigError> apply_config_line(ModelConfig& cfg, ClipSpec& clip,
                                                  const std::string& key,
                                                  const std::string& value) {
  std::vector<ConfigError> errors;
  try {
    if (key == "scale") {
      cfg.scale = value;
    } else if (key == "scheme") {
      auto s = parse_scheme(value);
      if (!s) errors.push_back({key, "unknown scheme '" + value + "'"});
      else cfg.scheme = *s;
    } else if (key == "bottleneck_ratio") {
      cfg.bottleneck_ratio = std::stod(value);
    } else if (key == "sta_k_values") {
      cfg.sta_k_values = parse_int_list(value);
    } else if (key == "conv_kernel") {
      auto v = parse_int_list(value);
      if (v.size() != 3) errors.push_back({key, "expected t,h,w"});
      else cfg.conv_kernel = {v[0], v[1], v[2]};
    } else if (key == "st_adapter_width") {
      cfg.st_adapter_width = std::stoll(value);
    } else if (key == "num_classes") {
      cfg.num_classes = std::stoll(value);
    } else if (key == "drop_path_rate") {
      cfg.drop_path_rate = std::stod(value);
    } else if (key == "image_size") {
      cfg.image_size = std::stoll(value);
    } else if (key == "patch_size") {
      cfg.patch_size = std::stoll(value);
    } else if (key == "temporal_pos_embed") {
      cfg.temporal_pos_embed = (value == "1" || value == "true");
    } else if (key == "dual_path_temporal_joint") {
      cfg.dual_path_temporal_joint = (value == "1" || value == "true");
    } else if (key == "dual_path_grid") {
      cfg.dual_path_grid = std::stoll(value);
    } else if (key == "dual_path_grid_frames") {
      cfg.dual_path_grid_frames = std::stoll(value);
    } else if (key == "dual_path_grid_interval") {
      cfg.dual_path_grid_interval = std::stoll(value);
    } else if (key == "head_hidden") {
      cfg.head_hidden = std::stoll(value);
    } else if (key == "T" || key == "frames") {
      clip.frames = std::stoll(value);
    } else if (key == "R" || key == "interval") {
      clip.interval = std::stoll(value);
    } else if (key == "fps") {
      clip.fps = std::stod(value);
    } else {
      errors.push_back({key, "unknown config key"});
    }
  } catch (const std::exception&) {
    errors.push_back({key, "could not parse value '" + value + "'"});
  }
  return errors;
}

/// Parses `key=value` lines; '#' starts a comment, blank lines are skipped.
inline std::vector<ConfigError> load_config_text(const std::string& text, ModelConfig& cfg,
                                                 ClipSpec& clip) {
  std::vector<ConfigError> errors;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto last = line.find_last_not_of(" \t\r");
    line = line.substr(first, last - first + 1);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back({line, "expected key=value"});
      continue;
    }
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t");
      auto b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    auto e = apply_config_line(cfg, clip, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    errors.insert(errors.end(), e.begin(), e.end());
  }
  return errors;
}

inline std::vector<ConfigError> load_config_file(const std::string& path, ModelConfig& cfg,
                                                 ClipSpec& clip) {
  std::ifstream in(path);
  if (!in) return {{"file", "cannot open config file '" + path + "'"}};
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str(), cfg, clip);
}

}  // namespace surgpetl
