#pragma once

#include <stdexcept>
#include <string>

namespace lpvbat {

enum class ErrorCode {
  InvalidArgument,
  InvalidRange,
  InvalidOrder,
  OutOfDomain,
  SocOutOfRange,
  NonpositiveTimeConstant,
  InsufficientData,
  LengthMismatch,
  DegenerateVariance,
  WindowTooLong,
  RankDeficient,
  ParseError,
  IoError,
};

/// Single exception type for the whole library; the code tells callers
/// (and the C API) which class of failure occurred.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

const char* error_code_name(ErrorCode code);

}  // namespace lpvbat
