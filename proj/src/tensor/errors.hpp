// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace cgnmt {

/// Failure categories. The numeric values are mirrored by the C API status codes.
enum class ErrorCode {
  InvalidArgument = 1,
  Dimension = 2,
  Index = 3,
  Config = 4,
  Io = 5,
  Format = 6,
  Numeric = 7,
  State = 8,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Dimension: return "dimension";
    case ErrorCode::Index: return "index";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
    case ErrorCode::Format: return "format";
    case ErrorCode::Numeric: return "numeric";
    case ErrorCode::State: return "state";
  }
  return "unknown";
}

}  // namespace cgnmt
