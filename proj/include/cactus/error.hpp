#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cactus {

enum class ErrorCode {
  // tabular
  MissingTarget,
  NonBinaryTarget,
  RaggedRow,
  EmptyDataset,
  UnknownColumn,
  NotCategorical,
  InfeasibleSplit,
  // missingness
  InfeasibleFraction,
  // abstraction / classifier
  DegenerateFeature,
  SingleClassTraining,
  UnknownFeature,
  KTooLarge,
  // baselines / interchange
  AllMissingFeature,
  SchemaViolation,
  NonFiniteImportance,
  // evaluation
  LengthMismatch,
  Empty,
  ZeroBaselineImportance,
  InvalidArgument,
  // reporting / cli
  FeatureMismatch,
  MissingLevelReport,
  ConfigInvalid,
  IoFailure,
  Internal,
};

// Exit-code classes of the command line tool. Values are stable.
enum class ErrorClass : int { Config = 2, Io = 3, Data = 4, Internal = 5 };

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingTarget: return "MissingTarget";
    case ErrorCode::NonBinaryTarget: return "NonBinaryTarget";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::NotCategorical: return "NotCategorical";
    case ErrorCode::InfeasibleSplit: return "InfeasibleSplit";
    case ErrorCode::InfeasibleFraction: return "InfeasibleFraction";
    case ErrorCode::DegenerateFeature: return "DegenerateFeature";
    case ErrorCode::SingleClassTraining: return "SingleClassTraining";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::AllMissingFeature: return "AllMissingFeature";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::NonFiniteImportance: return "NonFiniteImportance";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::Empty: return "Empty";
    case ErrorCode::ZeroBaselineImportance: return "ZeroBaselineImportance";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::FeatureMismatch: return "FeatureMismatch";
    case ErrorCode::MissingLevelReport: return "MissingLevelReport";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

constexpr ErrorClass error_class(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ConfigInvalid:
    case ErrorCode::InvalidArgument:
      return ErrorClass::Config;
    case ErrorCode::IoFailure:
      return ErrorClass::Io;
    case ErrorCode::Internal:
      return ErrorClass::Internal;
    default:
      return ErrorClass::Data;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorClass error_class() const noexcept { return cactus::error_class(code_); }

 private:
  ErrorCode code_;
};

}  // namespace cactus
