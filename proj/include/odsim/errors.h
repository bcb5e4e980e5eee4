#pragma once

#include <stdexcept>
#include <string>

namespace odsim {

// Operand shapes disagree (vocabulary size, feature dimension, matrix shape).
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A probability vector is negative, empty, or not normalized.
class InvalidDistribution : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input for which the requested quantity is undefined, e.g. residual(p, p).
class DegenerateInput : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A drafted token has zero draft probability.
class MalformedDraft : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Experiment configuration error; `path` names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace odsim
