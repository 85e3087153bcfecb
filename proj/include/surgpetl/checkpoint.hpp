#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "surgpetl/errors.hpp"
#include "surgpetl/nn.hpp"
#include "surgpetl/tensor.hpp"

namespace surgpetl {

/// Checkpoints are a flat name->array map in a little binary container:
///   magic "SPTL" | u32 version | u64 count |
///   per entry: u32 name_len | name | u32 ndim | i64 dims[] | f64 data[]
using NamedTensorMap = std::map<std::string, Tensor>;

namespace detail {
inline void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void write_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline uint32_t read_u32(std::istream& is) {
  uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
inline uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
}  // namespace detail

inline void save_tensor_map(const NamedTensorMap& map, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IOError("cannot write checkpoint '" + path + "'");
  os.write("SPTL", 4);
  detail::write_u32(os, 1);
  detail::write_u64(os, map.size());
  for (const auto& [name, tensor] : map) {
    detail::write_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    detail::write_u32(os, static_cast<uint32_t>(tensor.ndim()));
    for (int64_t d : tensor.shape()) detail::write_u64(os, static_cast<uint64_t>(d));
    os.write(reinterpret_cast<const char*>(tensor.data()),
             static_cast<std::streamsize>(tensor.numel() * sizeof(double)));
  }
  if (!os) throw IOError("short write to '" + path + "'");
}

inline NamedTensorMap load_tensor_map(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open checkpoint '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "SPTL", 4) != 0)
    throw CheckpointError("bad magic in '" + path + "'");
  const uint32_t version = detail::read_u32(is);
  if (version != 1) throw CheckpointError("unsupported checkpoint version");
  const uint64_t count = detail::read_u64(is);
  NamedTensorMap map;
  for (uint64_t i = 0; i < count; ++i) {
    const uint32_t name_len = detail::read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const uint32_t ndim = detail::read_u32(is);
    std::vector<int64_t> shape(ndim);
    for (uint32_t d = 0; d < ndim; ++d) shape[d] = static_cast<int64_t>(detail::read_u64(is));
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!is) throw CheckpointError("truncated checkpoint '" + path + "'");
    map.emplace(std::move(name), std::move(t));
  }
  return map;
}

/// What happened during a checkpoint import: names applied, names present in
/// the model but absent from the file, and vice versa. Temporal-specific
/// weights are expected to be absent (T-MSA reuses the spatial attention).
struct ImportReport {
  std::vector<std::string> loaded;
  std::vector<std::string> unmatched_model;
  std::vector<std::string> unmatched_checkpoint;
  std::vector<std::string> shape_mismatch;
};

inline ImportReport apply_checkpoint(const std::vector<ParamPtr>& params,
                                     const NamedTensorMap& map) {
  ImportReport report;
  std::map<std::string, bool> used;
  for (const auto& [name, _] : map) used[name] = false;
  for (const auto& p : params) {
    auto it = map.find(p->name);
    if (it == map.end()) {
      report.unmatched_model.push_back(p->name);
      continue;
    }
    used[p->name] = true;
    if (it->second.shape() != p->shape) {
      report.shape_mismatch.push_back(p->name + " model" + Tensor(p->shape).shape_str() +
                                      " ckpt" + it->second.shape_str());
      continue;
    }
    p->value = it->second.vec();
    p->ensure_grad();
    report.loaded.push_back(p->name);
  }
  for (const auto& [name, was_used] : used)
    if (!was_used) report.unmatched_checkpoint.push_back(name);
  return report;
}

inline NamedTensorMap snapshot_params(const std::vector<ParamPtr>& params) {
  NamedTensorMap map;
  for (const auto& p : params) map.emplace(p->name, Tensor(p->shape, p->value));
  return map;
}

}  // namespace surgpetl
