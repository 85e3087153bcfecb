#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace surgpetl {

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error("ShapeError: " + msg) {}
};

struct DimensionError : std::runtime_error {
  explicit DimensionError(const std::string& msg)
      : std::runtime_error("DimensionError: " + msg) {}
};

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& msg)
      : std::runtime_error("CheckpointError: " + msg) {}
};

struct LengthMismatch : std::runtime_error {
  explicit LengthMismatch(const std::string& msg)
      : std::runtime_error("LengthMismatch: " + msg) {}
};

struct EmptyInput : std::runtime_error {
  explicit EmptyInput(const std::string& msg) : std::runtime_error("EmptyInput: " + msg) {}
};

struct IOError : std::runtime_error {
  explicit IOError(const std::string& msg) : std::runtime_error("IOError: " + msg) {}
};

struct NaNLossError : std::runtime_error {
  explicit NaNLossError(const std::string& msg) : std::runtime_error("NaNLoss: " + msg) {}
};

/// One violated invariant from config validation: which field and why.
struct ConfigError {
  std::string field;
  std::string reason;
};

/// Thrown when an operation receives a config that never passed validation.
struct ConfigException : std::runtime_error {
  explicit ConfigException(const std::vector<ConfigError>& errors)
      : std::runtime_error(join(errors)), errors_(errors) {}
  explicit ConfigException(ConfigError e) : ConfigException(std::vector<ConfigError>{std::move(e)}) {}

  const std::vector<ConfigError>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<ConfigError>& errors) {
    std::string s = "ConfigError:";
    for (const auto& e : errors) s += " [" + e.field + "] " + e.reason + ";";
    return s;
  }
  std::vector<ConfigError> errors_;
};

}  // namespace surgpetl
