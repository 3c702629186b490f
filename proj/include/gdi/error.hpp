#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gdi {

enum class ErrorCode {
  SumNotOne,
  NegativeProportion,
  EmptyProportions,
  InvalidDesign,
  RichnessExceedsSpecies,
  CountExceedsSubsets,
  ParseError,
  NonPositiveTheta,
  SpeciesCountTooSmall,
  MissingGrouping,
  InvalidGrouping,
  DimensionMismatch,
  PerfectFit,
  NotNested,
  ZeroResidualDf,
  NoInteractionTerms,
  NoReplication,
  InvalidArgument,
  ConfigInvalid,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-checkable code; the message names the
/// offending row/column when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SumNotOne: return "SumNotOne";
    case ErrorCode::NegativeProportion: return "NegativeProportion";
    case ErrorCode::EmptyProportions: return "EmptyProportions";
    case ErrorCode::InvalidDesign: return "InvalidDesign";
    case ErrorCode::RichnessExceedsSpecies: return "RichnessExceedsSpecies";
    case ErrorCode::CountExceedsSubsets: return "CountExceedsSubsets";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonPositiveTheta: return "NonPositiveTheta";
    case ErrorCode::SpeciesCountTooSmall: return "SpeciesCountTooSmall";
    case ErrorCode::MissingGrouping: return "MissingGrouping";
    case ErrorCode::InvalidGrouping: return "InvalidGrouping";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::PerfectFit: return "PerfectFit";
    case ErrorCode::NotNested: return "NotNested";
    case ErrorCode::ZeroResidualDf: return "ZeroResidualDf";
    case ErrorCode::NoInteractionTerms: return "NoInteractionTerms";
    case ErrorCode::NoReplication: return "NoReplication";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace gdi
