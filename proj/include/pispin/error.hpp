#pragma once

#include <stdexcept>
#include <string>

namespace pispin {

/// Broad failure category. Each maps to one process exit code in the CLI.
enum class ErrorKind {
  io,          // unreadable/unwritable files
  dsp,         // signal-processing preconditions (too short, zero power, ...)
  data,        // malformed user data, orphan ids, bad configuration
  remote,      // service unreachable, protocol violations, auth failures
};

inline int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io: return 2;
    case ErrorKind::dsp: return 3;
    case ErrorKind::data: return 4;
    case ErrorKind::remote: return 5;
  }
  return 1;
}

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::dsp: return "dsp";
    case ErrorKind::data: return "data";
    case ErrorKind::remote: return "remote";
  }
  return "unknown";
}

/// Exception carrying a failure category and the pipeline stage that raised it.
/// what() reads "[stage] message" when a stage is set.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string stage, const std::string& message)
      : std::runtime_error(stage.empty() ? message : "[" + stage + "] " + message),
        kind_(kind),
        stage_(std::move(stage)),
        message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& message() const noexcept { return message_; }

  /// Same error re-labelled with an outer stage. Inner labels are kept.
  Error relabel(const std::string& outer) const {
    return Error(kind_, stage_.empty() ? outer : outer + "/" + stage_, message_);
  }

 private:
  ErrorKind kind_;
  std::string stage_;
  std::string message_;
};

inline Error io_error(const std::string& message, std::string stage = {}) {
  return Error(ErrorKind::io, std::move(stage), message);
}
inline Error dsp_error(const std::string& message, std::string stage = {}) {
  return Error(ErrorKind::dsp, std::move(stage), message);
}
inline Error data_error(const std::string& message, std::string stage = {}) {
  return Error(ErrorKind::data, std::move(stage), message);
}
inline Error remote_error(const std::string& message, std::string stage = {}) {
  return Error(ErrorKind::remote, std::move(stage), message);
}

}  // namespace pispin
