#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rulerepair {

// Failure categories surfaced by the library. Every thrown error carries one.
enum class ErrorKind {
  kUnresolvedPredicate,  // opaque predicate naming an unregistered labeler
  kContractViolation,    // opaque labeler returned an out-of-range label
  kInvalidStep,          // refinement path missing or not ending at a leaf
  kNoSeparator,          // two datapoints no predicate can tell apart
  kSizeGuard,            // exhaustive search refused: input too large
  kShapeMismatch,
  kInvalidArgument,
  kParse,
  kIo,
  kExternal,             // external aggregator failed or misbehaved
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUnresolvedPredicate: return "unresolved-predicate";
    case ErrorKind::kContractViolation: return "contract-violation";
    case ErrorKind::kInvalidStep: return "invalid-step";
    case ErrorKind::kNoSeparator: return "no-separator";
    case ErrorKind::kSizeGuard: return "size-guard";
    case ErrorKind::kShapeMismatch: return "shape-mismatch";
    case ErrorKind::kInvalidArgument: return "invalid-argument";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kExternal: return "external";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace rulerepair
