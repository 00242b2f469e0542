#include "errors.hpp"

namespace lpvbat {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::InvalidOrder: return "InvalidOrder";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::SocOutOfRange: return "SocOutOfRange";
    case ErrorCode::NonpositiveTimeConstant: return "NonpositiveTimeConstant";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::WindowTooLong: return "WindowTooLong";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace lpvbat
