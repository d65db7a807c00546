#pragma once

#include <stdexcept>
#include <string>

namespace avaseg {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration or input that fails validation. The CLI maps
/// these to exit code 1; everything else is a runtime failure (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Grid geometry mismatch, out-of-bounds window or unsupported dimensions.
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Tensor shape mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace avaseg
