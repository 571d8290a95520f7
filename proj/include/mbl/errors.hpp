#pragma once

#include <stdexcept>
#include <string>

namespace mbl {

/// Base of every error raised by the library. The CLI maps subclasses to
/// process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Problem size exceeds the configured solver cap.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class DegenerateSpectrum : public Error {
 public:
  using Error::Error;
};

class InsufficientLevels : public Error {
 public:
  using Error::Error;
};

class DegenerateBatch : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss during training.
class DivergenceError : public Error {
 public:
  DivergenceError(int epoch, const std::string& what)
      : Error("diverged at epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class NoOverlap : public Error {
 public:
  using Error::Error;
};

class NotCrossed : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Missing upstream artifact for a pipeline stage.
class MissingArtifact : public Error {
 public:
  using Error::Error;
};

enum class FormatErrorKind { corrupt_header, version_mismatch, truncated_payload, count_mismatch };

inline const char* to_string(FormatErrorKind kind) {
  switch (kind) {
    case FormatErrorKind::corrupt_header: return "corrupt header";
    case FormatErrorKind::version_mismatch: return "version mismatch";
    case FormatErrorKind::truncated_payload: return "truncated payload";
    case FormatErrorKind::count_mismatch: return "count mismatch";
  }
  return "format error";
}

class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what)
      : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

}  // namespace mbl
