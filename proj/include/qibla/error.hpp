#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qibla {

enum class ErrorCode {
  InvalidArgument,
  InvalidAngle,
  InvalidCoordinate,
  DegeneratePoints,
  AntipodalPoints,
  OutOfCoverage,
  InsufficientData,
  DegenerateSweep,
  DynamicSample,
  ScenarioError,
  OutOfSpan,
  IoError,
  ParseError,
  DuplicateCity,
  UnknownCity,
  EmptyReport,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }

  // 1-based line number for ParseError raised by the file loaders.
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace qibla
