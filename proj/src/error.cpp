#include "qibla/error.hpp"

namespace qibla {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return "InvalidArgument";
    case ErrorCode::InvalidAngle:
      return "InvalidAngle";
    case ErrorCode::InvalidCoordinate:
      return "InvalidCoordinate";
    case ErrorCode::DegeneratePoints:
      return "DegeneratePoints";
    case ErrorCode::AntipodalPoints:
      return "AntipodalPoints";
    case ErrorCode::OutOfCoverage:
      return "OutOfCoverage";
    case ErrorCode::InsufficientData:
      return "InsufficientData";
    case ErrorCode::DegenerateSweep:
      return "DegenerateSweep";
    case ErrorCode::DynamicSample:
      return "DynamicSample";
    case ErrorCode::ScenarioError:
      return "ScenarioError";
    case ErrorCode::OutOfSpan:
      return "OutOfSpan";
    case ErrorCode::IoError:
      return "IoError";
    case ErrorCode::ParseError:
      return "ParseError";
    case ErrorCode::DuplicateCity:
      return "DuplicateCity";
    case ErrorCode::UnknownCity:
      return "UnknownCity";
    case ErrorCode::EmptyReport:
      return "EmptyReport";
  }
  return "Unknown";
}

namespace {

std::string decorate(ErrorCode code, const std::string& message, std::optional<std::size_t> line) {
  std::string out(to_string(code));
  if (line) out += " (line " + std::to_string(*line) + ")";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(decorate(code, message, line)), code_(code), line_(line) {}

}  // namespace qibla
