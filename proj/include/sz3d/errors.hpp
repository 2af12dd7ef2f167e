#pragma once

#include <stdexcept>
#include <string>

namespace sz3d {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents or channel counts that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied configuration (specs, flags, config files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An operation invoked in the wrong lifecycle state, e.g. backward before forward.
class StateError : public Error {
 public:
  using Error::Error;
};

/// Broken internal bookkeeping (corrupt index maps and the like).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t step)
      : Error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/// An iterative solver stopped at its iteration cap without meeting tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// A metric that is undefined for the given input (e.g. AUC on one class).
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Failures while decoding NIfTI volumes or model containers. Each failure
/// mode carries its own code so callers can tell them apart.
class FormatError : public Error {
 public:
  enum class Code {
    BadMagic,
    UnsupportedDatatype,
    BadDimensions,
    Truncated,
    ValueOutOfRange,
    ChecksumMismatch,
    UnknownVersion,
    Malformed,
  };

  FormatError(Code code, const std::string& what) : Error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

/// A bad manifest row. `row` is the 1-based line number in the file (the
/// header is line 1).
class ManifestError : public Error {
 public:
  enum class Code { Malformed, DuplicateId, MissingFile, ShapeMismatch, BadLabel };

  ManifestError(Code code, std::size_t row, const std::string& what)
      : Error(what), code_(code), row_(row) {}
  Code code() const { return code_; }
  std::size_t row() const { return row_; }

 private:
  Code code_;
  std::size_t row_;
};

}  // namespace sz3d
