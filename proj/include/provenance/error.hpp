#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace provenance {

enum class ErrorCode {
  EmptyField,
  MalformedTemplate,
  InvalidParameter,
  EmptyInput,
  BackendFailure,
  NonFiniteScore,
  OutOfRangeScore,
  WeightSumMismatch,
  DimensionMismatch,
  ZeroVector,
  ParseError,
  ValidationError,
  SingleClass,
  LengthMismatch,
  AllRecordsFailed,
  ModelFormat,
  ChecksumMismatch,
  ConfigError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the engine. `stage` names the pipeline stage that
/// raised it when the error crossed a pipeline boundary, and is empty otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string detail, std::string stage = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::string& stage() const noexcept { return stage_; }

  /// Copy of this error tagged with a stage; an existing tag is kept.
  Error with_stage(std::string stage) const;

 private:
  ErrorCode code_;
  std::string detail_;
  std::string stage_;
};

}  // namespace provenance
