#pragma once

#include <stdexcept>
#include <string>

namespace ea {

/// Failure categories. The CLI maps each to a process exit code.
enum class ErrorKind {
  validation,    // malformed input files, precondition violations
  config,        // bad segmentation or run configuration
  parse,         // unparseable model output
  fixture_miss,  // replay transport has no stored response
  provider,      // HTTP, auth, or retry exhaustion against a live endpoint
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// 0 success, 1 validation, 2 fixture miss, 3 provider error.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::fixture_miss:
      return 2;
    case ErrorKind::provider:
      return 3;
    default:
      return 1;
  }
}

}  // namespace ea
