#pragma once
#include <stdexcept>
#include <string>

namespace lexkit {

// Error taxonomy shared by the whole library. The CLI maps these onto
// exit codes: validation/usage/config/shape/corruption -> 2, numerical -> 3.

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string &msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string &msg) : std::runtime_error(msg) {}
};

struct UsageError : std::runtime_error {
  explicit UsageError(const std::string &msg) : std::runtime_error(msg) {}
};

struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string &msg) : std::runtime_error(msg) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string &msg) : std::runtime_error(msg) {}
};

struct CorruptionError : std::runtime_error {
  explicit CorruptionError(const std::string &msg) : std::runtime_error(msg) {}
};

}  // namespace lexkit
