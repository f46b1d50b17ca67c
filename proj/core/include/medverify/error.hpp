#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace medv {

enum class ErrorCode {
  // verifier output grammar
  Format,
  Score,
  // files and schemas
  Io,
  Schema,
  Json,
  BiocSchema,
  LengthMismatch,
  Checkpoint,
  // degenerate inputs
  EmptyText,
  EmptyClaim,
  EmptyList,
  EmptySet,
  EmptySample,
  InvalidArgument,
  DimMismatch,
  UnknownAnswer,
  UnparseableAnswer,
  NoIdentifier,
  // remote services
  Transport,
  Auth,
  RateLimit,
  EmptyResponse,
  // orchestration
  Config,
  StageInputMissing,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures are reported as medv::Error. `subject` names the thing
// at fault when there is one: a config field path, a pmid, a stage name.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string subject = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorCode code_;
  std::string subject_;
};

}  // namespace medv
