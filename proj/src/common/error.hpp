#pragma once

#include <stdexcept>
#include <string>

namespace rmtlab {

enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  InsufficientData = 2,
  Parse = 3,
  Numeric = 4,
  DegenerateInput = 5,
  Calibration = 6,
  OutOfRange = 7,
  NotAvailable = 8,
  Io = 9,
  Internal = 10,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace rmtlab
