#ifndef OTTER_ERROR_H_
#define OTTER_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace otter {

enum class ErrorCode {
  kInvalidArgument,
  kNegativeEntry,
  kRowSumViolation,
  kNonFiniteEntry,
  kSimplexViolation,
  kDimensionMismatch,
  kUnbalancedProblem,
  kNumericalUnderflow,
  kEmptyPartition,
  kMissingClass,
  kSingularConfusion,
  kOffSimplex,
  kAlphaTooLarge,
  kParseError,
  kIoError,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every recoverable failure in the library is reported with this type. The
// code lets callers (and the CLI's exit-status mapping) branch without
// parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace otter

#endif  // OTTER_ERROR_H_
