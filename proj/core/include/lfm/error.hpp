#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lfm {

enum class ErrorCode {
  dimension,
  argument,
  format,
  io,
  structure,
  numeric,
};

/// Stable short tag used as the one-line prefix on the CLI diagnostic stream.
constexpr std::string_view code_tag(ErrorCode code) {
  switch (code) {
    case ErrorCode::dimension: return "E_DIM";
    case ErrorCode::argument: return "E_ARG";
    case ErrorCode::format: return "E_FORMAT";
    case ErrorCode::io: return "E_IO";
    case ErrorCode::structure: return "E_STRUCT";
    case ErrorCode::numeric: return "E_NUMERIC";
  }
  return "E_UNKNOWN";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(ErrorCode::dimension, what) {}
};

class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& what) : Error(ErrorCode::argument, what) {}
};

class StructureError : public Error {
 public:
  explicit StructureError(const std::string& what) : Error(ErrorCode::structure, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorCode::numeric, what) {}
};

/// Parse failure. offset is the byte position in the input where decoding stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(ErrorCode::format, what + " (at byte " + std::to_string(offset) + ")"),
        detail_(what),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }
  /// Message without the offset suffix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::size_t offset_;
};

}  // namespace lfm
