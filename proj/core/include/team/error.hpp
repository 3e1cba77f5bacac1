#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace team {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is out of its valid range.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failure (missing file, unwritable directory, short write).
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed on-disk data. Carries the byte offset where parsing stopped,
/// or `kNoOffset` when the problem is structural rather than positional.
class FormatError : public Error {
 public:
  static constexpr std::size_t kNoOffset = std::numeric_limits<std::size_t>::max();

  FormatError(const std::string& file, std::size_t offset, const std::string& what)
      : Error(compose(file, offset, what)), file_(file), offset_(offset) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  static std::string compose(const std::string& file, std::size_t offset,
                             const std::string& what) {
    std::string msg = file;
    if (offset != kNoOffset) msg += " at byte " + std::to_string(offset);
    msg += ": " + what;
    return msg;
  }

  std::string file_;
  std::size_t offset_;
};

/// NaN or Inf met where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace team
