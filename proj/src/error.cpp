#include "provenance/error.hpp"

namespace provenance {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyField: return "EmptyField";
    case ErrorCode::MalformedTemplate: return "MalformedTemplate";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::NonFiniteScore: return "NonFiniteScore";
    case ErrorCode::OutOfRangeScore: return "OutOfRangeScore";
    case ErrorCode::WeightSumMismatch: return "WeightSumMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::AllRecordsFailed: return "AllRecordsFailed";
    case ErrorCode::ModelFormat: return "ModelFormat";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& detail, const std::string& stage) {
  std::string out;
  if (!stage.empty()) out += "[" + stage + "] ";
  out += to_string(code);
  if (!detail.empty()) out += ": " + detail;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, std::string detail, std::string stage)
    : std::runtime_error(compose(code, detail, stage)),
      code_(code),
      detail_(std::move(detail)),
      stage_(std::move(stage)) {}

Error Error::with_stage(std::string stage) const {
  if (!stage_.empty()) return *this;
  return Error(code_, detail_, std::move(stage));
}

}  // namespace provenance
