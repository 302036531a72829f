#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace topomacro {

enum class ErrorKind {
  GenerationFailed,
  UnknownNode,
  SelfEdge,
  EmptyMap,
  Unreachable,
  ShapeMismatch,
  EmptyCandidates,
  UnknownKey,
  TypeError,
  MissingFile,
  ParseError,
  IoError,
  InvalidArgument,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::GenerationFailed: return "GenerationFailed";
    case ErrorKind::UnknownNode: return "UnknownNode";
    case ErrorKind::SelfEdge: return "SelfEdge";
    case ErrorKind::EmptyMap: return "EmptyMap";
    case ErrorKind::Unreachable: return "Unreachable";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::EmptyCandidates: return "EmptyCandidates";
    case ErrorKind::UnknownKey: return "UnknownKey";
    case ErrorKind::TypeError: return "TypeError";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Single exception type for the library; callers switch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace topomacro
