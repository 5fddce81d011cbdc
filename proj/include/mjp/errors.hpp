#ifndef MJP_ERRORS_HPP
#define MJP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mjp {

enum class Err {
  NegativeOffDiagonal,
  RowSumNonzero,
  AbsorbingState,
  Reducible,
  SingularSolve,
  NotConverged,
  Overflow,
  AttemptsExhausted,
  NotDiagonalizable,
  RootFindFailure,
  SeriesTruncation,
  RecursionDepthExceeded,
  ZeroOccupation,
  UnreachableEndpoint,
  UnknownName,
  BadDimension,
  BadInput,
};

const char* err_name(Err code);

/// All domain failures are reported through this exception; what() starts
/// with the error name so callers (and the CLI) can surface it directly.
class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& detail)
      : std::runtime_error(std::string(err_name(code)) + ": " + detail),
        code_(code) {}

  Err code() const { return code_; }

 private:
  Err code_;
};

}  // namespace mjp

#endif
