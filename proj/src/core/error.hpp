#pragma once

#include <stdexcept>
#include <string>

namespace viewflow {

enum class ErrorCode {
  InvalidArgument,
  Parse,
  Validation,
  Io,
  Empty,
  Source,
  Internal,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, std::string msg)
      : std::runtime_error(std::move(msg)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace viewflow
