#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace mshist {

enum class ErrorCode {
  invalid_argument,
  out_of_bounds,
  empty_window,
  degenerate_image,
  bad_magic,
  unsupported_format,
  truncated,
  corrupt_rle,
  dimension_overflow,
  short_payload,
  invalid_sample,
  out_of_range_sample,
  io_failure,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::out_of_bounds: return "out of bounds";
    case ErrorCode::empty_window: return "empty window";
    case ErrorCode::degenerate_image: return "degenerate image";
    case ErrorCode::bad_magic: return "bad magic";
    case ErrorCode::unsupported_format: return "unsupported format";
    case ErrorCode::truncated: return "truncated data";
    case ErrorCode::corrupt_rle: return "corrupt run-length data";
    case ErrorCode::dimension_overflow: return "dimension overflow";
    case ErrorCode::short_payload: return "short payload";
    case ErrorCode::invalid_sample: return "invalid sample";
    case ErrorCode::out_of_range_sample: return "sample out of range";
    case ErrorCode::io_failure: return "i/o failure";
  }
  return "unknown error";
}

/// Library error. Decoders attach the byte offset at which parsing failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(compose(code, what, std::nullopt)), code_(code) {}

  Error(ErrorCode code, const std::string& what, std::size_t offset)
      : std::runtime_error(compose(code, what, offset)), code_(code), offset_(offset) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  static std::string compose(ErrorCode code, const std::string& what,
                             std::optional<std::size_t> offset) {
    std::string msg = to_string(code);
    msg += ": ";
    msg += what;
    if (offset) {
      msg += " (at byte ";
      msg += std::to_string(*offset);
      msg += ")";
    }
    return msg;
  }

  ErrorCode code_;
  std::optional<std::size_t> offset_;
};

}  // namespace mshist
