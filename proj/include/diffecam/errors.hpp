#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace diffecam {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Two rasters (or a raster and a model) disagree on shape.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Invalid parameters: bad rates, degenerate PSF settings, malformed config.
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Solver blow-up or an operator that cannot be inverted.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Malformed or truncated raster file.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

} // namespace diffecam
