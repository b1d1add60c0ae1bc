#pragma once

#include <stdexcept>
#include <string>

namespace advregions {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent configuration: missing class directory, empty class,
// out-of-range hyper-parameter.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A file on disk could not be read or decoded.
class IngestionError : public Error {
 public:
  IngestionError(std::string path, const std::string& what)
      : Error(path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// Argument does not satisfy an operation's precondition (shape, range).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(int epoch, const std::string& what)
      : Error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

// Raised by the pipeline; names the stage that failed.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error("[" + stage + "] " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace advregions
