#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fpclust {

enum class ErrorKind {
  // configuration / argument errors
  InvalidConfig,
  InvalidArg,
  MissingPositiveClass,
  // data errors
  MissingFile,
  DimensionMismatch,
  MalformedManifest,
  UnsupportedFormat,
  IoFailure,
  UnknownId,
  ShapeMismatch,
  TooLarge,
  // numerical errors
  NumericalFailure,
  RankDeficient,
  RankTooLow,
  DegenerateInput,
  DegenerateAffinity,
  DegenerateOptimum,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::InvalidArg: return "InvalidArg";
    case ErrorKind::MissingPositiveClass: return "MissingPositiveClass";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::MalformedManifest: return "MalformedManifest";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::UnknownId: return "UnknownId";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::RankTooLow: return "RankTooLow";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::DegenerateAffinity: return "DegenerateAffinity";
    case ErrorKind::DegenerateOptimum: return "DegenerateOptimum";
  }
  return "Unknown";
}

/// Process exit code for the CLI: 2 config, 3 data, 4 numerical.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::InvalidArg:
    case ErrorKind::MissingPositiveClass:
      return 2;
    case ErrorKind::MissingFile:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::MalformedManifest:
    case ErrorKind::UnsupportedFormat:
    case ErrorKind::IoFailure:
    case ErrorKind::UnknownId:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::TooLarge:
      return 3;
    default:
      return 4;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace fpclust
