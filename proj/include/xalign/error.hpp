#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace xalign {

// Every failure surfaced by the library carries one of these categories. The
// CLI prints the category name as the first token of its error line.
enum class ErrorKind {
  IoFailure,
  MalformedHeader,
  DimensionMismatch,
  NonNumericValue,
  NonFiniteValue,
  EmptyToken,
  InvalidToken,
  TruncatedFile,
  ZeroVectorRow,
  MalformedLine,
  EmptyDictionary,
  NoAnchorsRetained,
  NoConvergence,
  QueryOov,
  KTooLarge,
  EmptyEvaluationSet,
  DegenerateData,
  PerplexityTooLarge,
  ModeMismatch,
  MalformedMap,
  MalformedReport,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonNumericValue: return "NonNumericValue";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::EmptyToken: return "EmptyToken";
    case ErrorKind::InvalidToken: return "InvalidToken";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::ZeroVectorRow: return "ZeroVectorRow";
    case ErrorKind::MalformedLine: return "MalformedLine";
    case ErrorKind::EmptyDictionary: return "EmptyDictionary";
    case ErrorKind::NoAnchorsRetained: return "NoAnchorsRetained";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::QueryOov: return "QueryOov";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::EmptyEvaluationSet: return "EmptyEvaluationSet";
    case ErrorKind::DegenerateData: return "DegenerateData";
    case ErrorKind::PerplexityTooLarge: return "PerplexityTooLarge";
    case ErrorKind::ModeMismatch: return "ModeMismatch";
    case ErrorKind::MalformedMap: return "MalformedMap";
    case ErrorKind::MalformedReport: return "MalformedReport";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  // Row indices (ZeroVectorRow) or the 1-based line number (parse errors).
  // Empty when not applicable.
  const std::vector<std::size_t>& locations() const noexcept { return locations_; }

  Error& with_locations(std::vector<std::size_t> locations) {
    locations_ = std::move(locations);
    return *this;
  }

 private:
  ErrorKind kind_;
  std::vector<std::size_t> locations_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

[[noreturn]] inline void fail_at(ErrorKind kind, std::size_t line, const std::string& message) {
  throw Error(kind, "line " + std::to_string(line) + ": " + message)
      .with_locations({line});
}

}  // namespace xalign
