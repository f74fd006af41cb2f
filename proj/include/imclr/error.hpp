#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace imclr {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not compose.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Requested rank outside [1, min(rows, cols)] for some matrix or group.
class RankError : public Error {
 public:
  using Error::Error;
};

/// Index or parameter outside its admissible range.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver hit its sweep cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::size_t iterations)
      : Error(what), iterations_(iterations) {}
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  std::size_t iterations_;
};

/// Malformed or inconsistent file content (manifests, blobs, descriptors).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration; maps to CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace imclr
