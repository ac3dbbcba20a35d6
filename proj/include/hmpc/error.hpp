#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hmpc {

enum class ErrorKind {
  DimensionMismatch,
  NonzeroSelfCoupling,
  ComplexDominantMode,
  DefectiveMode,
  SingularDCGain,
  EmptyResult,
  NotContractive,
  NotSchur,
  DesignFailed,
  DesignIncomplete,
  InfeasibleHL,
  InfeasibleLL,
  RankDeficient,
  InfeasibleTuning,
  ConfigInvalid,
  UnstableDiscretization,
  FormatError,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace hmpc
