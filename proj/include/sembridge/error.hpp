#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sembridge {

/// Failure classes shared by every module. The CLI maps each kind onto a
/// stable exit code (see exit_code()).
enum class ErrorKind {
  format,      // malformed file bytes
  validation,  // well-formed input violating an invariant
  degenerate,  // zero-norm vectors and similar
  alignment,   // row/vocabulary count mismatch
  config,      // inconsistent configuration
  io,          // filesystem failures
  solver,      // iterative solver did not converge
  numeric,     // decomposition failures
  inapplicable // metric not defined for the given input
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::format: return "format";
    case ErrorKind::validation: return "validation";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::config: return "config";
    case ErrorKind::io: return "io";
    case ErrorKind::solver: return "solver";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::inapplicable: return "inapplicable";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// 2 for usage/validation problems, 3 for runtime or numeric failures.
  int exit_code() const noexcept {
    switch (kind_) {
      case ErrorKind::io:
      case ErrorKind::solver:
      case ErrorKind::numeric:
        return 3;
      default:
        return 2;
    }
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace sembridge
