#pragma once

#include <stdexcept>
#include <string>

namespace sessrec {

/** Invalid or contradictory configuration (unknown keys, unsupported combinations). */
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/** Unusable input data (missing files, too many malformed rows). */
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/** Dimension or length mismatch between tensors/sequences. */
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

/** Non-finite values where finite arithmetic is required. */
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/** Filesystem-level failure. */
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace sessrec
