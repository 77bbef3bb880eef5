#pragma once

#include <stdexcept>
#include <string>

namespace camo {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates a documented precondition or type invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A file could not be read, parsed or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Patch optimisation produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::string last_checkpoint)
      : Error(what), last_checkpoint_(std::move(last_checkpoint)) {}

  /// Directory of the most recent checkpoint, empty when none was written.
  const std::string& last_checkpoint() const noexcept { return last_checkpoint_; }

 private:
  std::string last_checkpoint_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace camo
