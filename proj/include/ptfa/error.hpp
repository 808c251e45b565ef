#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ptfa {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  ConstantColumn,
  AllMissingColumn,
  MissingValues,
  SingularMatrix,
  SingularModelCovariance,
  SingularLagMoment,
  NotPositiveDefinite,
  ZeroVarianceTarget,
  DegenerateInit,
  ZeroWeightVector,
  RankDeficientScores,
  NegativeVarianceGap,
  InsufficientData,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every recoverable failure in the library is reported through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the banded Cholesky when a pivot block is not positive definite.
class NotPositiveDefiniteError : public Error {
 public:
  NotPositiveDefiniteError(int block, const std::string& what)
      : Error(ErrorCode::NotPositiveDefinite, what), block_(block) {}

  int block() const noexcept { return block_; }

 private:
  int block_;
};

}  // namespace ptfa
