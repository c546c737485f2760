#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ergoperiod {

enum class ErrorCode {
  InvalidArgument,
  ConfigInvalid,
  NonCommensurateTime,
  HorizonExceeded,
  PartitionMismatch,
  NumericalDegeneracy,
  StateSpaceTooLarge,
  NotInvariant,
  SetNotRepresentable,
  GridIncommensurate,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above; the C
/// API maps them one-to-one onto ergo_status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::NonCommensurateTime: return "NonCommensurateTime";
    case ErrorCode::HorizonExceeded: return "HorizonExceeded";
    case ErrorCode::PartitionMismatch: return "PartitionMismatch";
    case ErrorCode::NumericalDegeneracy: return "NumericalDegeneracy";
    case ErrorCode::StateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::NotInvariant: return "NotInvariant";
    case ErrorCode::SetNotRepresentable: return "SetNotRepresentable";
    case ErrorCode::GridIncommensurate: return "GridIncommensurate";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::InvalidArgument, message);
}

}  // namespace ergoperiod
