#pragma once

#include <stdexcept>
#include <string>

namespace corneal {

enum class ErrorCode {
  DegenerateInput,
  BadEllipse,
  EyeNotFound,
  LimbusNotFound,
  ObjectNotFound,
  NoSolution,
  DivergentRays,
  NoIntersection,
  ConfigInvalid,
  EmptySelection,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::BadEllipse: return "BadEllipse";
    case ErrorCode::EyeNotFound: return "EyeNotFound";
    case ErrorCode::LimbusNotFound: return "LimbusNotFound";
    case ErrorCode::ObjectNotFound: return "ObjectNotFound";
    case ErrorCode::NoSolution: return "NoSolution";
    case ErrorCode::DivergentRays: return "DivergentRays";
    case ErrorCode::NoIntersection: return "NoIntersection";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every recoverable failure in the library is raised as this type; the
/// pipeline driver turns the code into a per-sample failure reason.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace corneal
