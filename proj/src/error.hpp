#pragma once

#include <stdexcept>
#include <string>

namespace wad {

enum class ErrorCode {
  MalformedRequestLine,
  MalformedHeader,
  EmptyCorpus,
  VocabTooSmall,
  ShapeMismatch,
  IdOutOfRange,
  SpanOutOfRange,
  NotAProbability,
  NonFiniteLoss,
  IoFailure,
  UnknownFormat,
  EmptyDataset,
  ChecksumMismatch,
  ConfigError,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::MalformedRequestLine: return "MalformedRequestLine";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::VocabTooSmall: return "VocabTooSmall";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IdOutOfRange: return "IdOutOfRange";
    case ErrorCode::SpanOutOfRange: return "SpanOutOfRange";
    case ErrorCode::NotAProbability: return "NotAProbability";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::UnknownFormat: return "UnknownFormat";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace wad
