#pragma once

#include <stdexcept>
#include <string>

namespace skinaudit {

enum class ErrorKind {
  Parse,
  DuplicateId,
  MissingField,
  MissingFile,
  Decode,
  DimensionMismatch,
  EmptySample,
  InsufficientData,
  ConstantSeries,
  InvalidArgument,
  Io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::DuplicateId: return "duplicate id";
    case ErrorKind::MissingField: return "missing field";
    case ErrorKind::MissingFile: return "missing file";
    case ErrorKind::Decode: return "decode error";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::EmptySample: return "empty sample";
    case ErrorKind::InsufficientData: return "insufficient data";
    case ErrorKind::ConstantSeries: return "constant series";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::Io: return "i/o error";
  }
  return "unknown error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Data errors are attributable to an input record; everything else is configuration.
inline bool is_data_error(ErrorKind k) {
  switch (k) {
    case ErrorKind::MissingFile:
    case ErrorKind::Decode:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::EmptySample:
    case ErrorKind::InsufficientData:
    case ErrorKind::ConstantSeries:
      return true;
    default:
      return false;
  }
}

}  // namespace skinaudit
