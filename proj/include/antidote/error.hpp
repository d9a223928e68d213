#pragma once

#include <stdexcept>
#include <string>

namespace antidote {

enum class ErrorKind {
  InvalidArgument,  // caller violated a precondition
  Io,               // file missing or unreadable
  Parse,            // malformed input file
  NotConverged,     // iterative method hit its cap
  Internal,
};

/// Structured error raised by every module. The CLI maps the kind to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for errors caused by user input rather than by this library.
  bool is_user_error() const noexcept {
    return kind_ == ErrorKind::InvalidArgument || kind_ == ErrorKind::Io || kind_ == ErrorKind::Parse;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace antidote
