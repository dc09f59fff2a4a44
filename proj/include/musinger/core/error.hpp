#pragma once

#include <stdexcept>
#include <string>

namespace musinger {

/// Error categories shared by every module. Each maps to one failure kind
/// named in the public contracts (wire decode, file parsing, kinematics...).
enum class Errc {
  InvalidInput,
  Validation,
  Range,
  FrameLength,
  BadHeader,
  Corrupt,
  Unreachable,
  BadFormat,
  BadChannel,
  BadOrder,
  TooShort,
  EmptyData,
  MissingCells,
  DomainError,
  Config,
  Io,
  Network,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, int line = 0)
      : std::runtime_error(what), code_(code), line_(line) {}

  Errc code() const noexcept { return code_; }
  /// 1-based source line for parse errors, 0 when not applicable.
  int line() const noexcept { return line_; }

 private:
  Errc code_;
  int line_;
};

}  // namespace musinger
