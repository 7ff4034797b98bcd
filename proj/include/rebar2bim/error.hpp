#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rebar2bim {

enum class ErrorCode {
  Schema,
  DimMismatch,
  NonFinite,
  DepthOob,
  Oob,
  Border,
  Checksum,
  Ambiguous,
  InvalidBbox,
  BehindCamera,
  SingularK,
  NoHit,
  IdConflict,
  MissingDirection,
  ExtraScans,
  EmptyWindow,
  DepthExceedsThickness,
  UnlinkedScan,
  DanglingLink,
  DuplicateLink,
  InvalidModel,
  Syntax,
  LayoutOob,
  FiducialNotVisible,
  Io,
};

/// Stable textual code, e.g. "E_SCHEMA". These strings are part of the CLI
/// contract and appear verbatim in error messages.
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace rebar2bim
