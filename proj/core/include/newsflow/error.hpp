#pragma once

#include <stdexcept>
#include <string>

namespace newsflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or violated precondition. Detected before any work
/// is done; the CLI maps it to exit code 1.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or internally inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage failed. Carries the stage name; the CLI maps it to exit
/// code 2.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error("stage '" + stage + "' failed: " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace newsflow
