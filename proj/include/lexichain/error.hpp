#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lexichain {

enum class ErrorKind {
  invalid_input,
  io,
  empty_dictionary,
  index_build,
  extraction_failure,
  transport,
  protocol,
  script_exhausted,
  empty_translation,
  alignment,
  size,
  comparison,
  run_failed,
  config,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::io: return "io";
    case ErrorKind::empty_dictionary: return "empty-dictionary";
    case ErrorKind::index_build: return "index-build";
    case ErrorKind::extraction_failure: return "extraction-failure";
    case ErrorKind::transport: return "transport";
    case ErrorKind::protocol: return "protocol";
    case ErrorKind::script_exhausted: return "script-exhausted";
    case ErrorKind::empty_translation: return "empty-translation";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::size: return "size";
    case ErrorKind::comparison: return "comparison";
    case ErrorKind::run_failed: return "run-failed";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI,
/// the batch harness) can map it to an exit code or a record field.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Transport failures optionally remember the HTTP status that caused them.
class TransportError : public Error {
 public:
  explicit TransportError(const std::string& what, int status = 0)
      : Error(ErrorKind::transport, what), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace lexichain
