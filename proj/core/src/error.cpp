#include "medverify/error.hpp"

namespace medv {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Format: return "FormatError";
    case ErrorCode::Score: return "ScoreError";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Schema: return "SchemaError";
    case ErrorCode::Json: return "JsonError";
    case ErrorCode::BiocSchema: return "BiocSchemaError";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Checkpoint: return "CheckpointError";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::EmptyClaim: return "EmptyClaim";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::UnknownAnswer: return "UnknownAnswer";
    case ErrorCode::UnparseableAnswer: return "UnparseableAnswer";
    case ErrorCode::NoIdentifier: return "NoIdentifier";
    case ErrorCode::Transport: return "TransportError";
    case ErrorCode::Auth: return "AuthError";
    case ErrorCode::RateLimit: return "RateLimitError";
    case ErrorCode::EmptyResponse: return "EmptyResponse";
    case ErrorCode::Config: return "ConfigError";
    case ErrorCode::StageInputMissing: return "StageInputMissing";
  }
  return "Error";
}

namespace {
std::string compose(ErrorCode code, const std::string& message, const std::string& subject) {
  std::string out(to_string(code));
  if (!subject.empty()) out += "(" + subject + ")";
  out += ": ";
  out += message;
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::string subject)
    : std::runtime_error(compose(code, message, subject)), code_(code), subject_(std::move(subject)) {}

}  // namespace medv
