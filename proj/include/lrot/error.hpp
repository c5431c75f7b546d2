#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lrot {

enum class ErrorKind {
  kInvalidArgument,
  kEmptyMeasure,
  kNonPositiveWeight,
  kWeightSumMismatch,
  kDimensionMismatch,
  kSizeCapExceeded,
  kNonFiniteKernel,
  kZeroRowSum,
  kZeroColumnSum,
  kInnerNoConvergence,
  kInfeasibleInit,
  kRankTooSmall,
  kAsymmetricCost,
  kNonPositiveBandwidth,
  kDegenerateFit,
  kNonFiniteGradient,
  kNoConvergence,
  kUsageError,
  kParseError,
  kNumericalFailure,
};

std::string_view ErrorKindName(ErrorKind kind);

// Every failure raised by the library carries a machine-readable kind so the
// CLI can map it to an exit code and tests can assert on it.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message), kind_(kind), message_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

}  // namespace lrot
