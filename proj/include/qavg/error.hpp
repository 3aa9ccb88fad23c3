#pragma once

#include <stdexcept>
#include <string>

namespace qavg {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (unknown family, bad probability grid, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Rank-deficient design or singular normal matrix.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Mismatched series lengths or matrix dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double gap)
      : Error(what + " (achieved gap " + std::to_string(gap) + ")"), gap_(gap) {}

  double gap() const noexcept { return gap_; }

 private:
  double gap_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Wraps a failure with the pipeline stage in which it happened.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::exception& cause)
      : Error(stage + ": " + cause.what()), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

}  // namespace qavg
