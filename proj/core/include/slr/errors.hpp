#ifndef SLR_ERRORS_HPP
#define SLR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace slr {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A problem definition violates a structural precondition.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(what) {}
};

// A black-box evaluation failed (bad arity, non-finite result, solver
// failure inside the oracle, ...).
class OracleError : public Error {
 public:
  explicit OracleError(const std::string& what) : Error(what) {}
};

// An evaluation certified that the queried region contains no feasible
// point.  Callers that manage box partitions treat this as "drop the box"
// rather than as a hard failure.
class InfeasibleRegionError : public OracleError {
 public:
  explicit InfeasibleRegionError(const std::string& what) : OracleError(what) {}
};

// Linear algebra inside the LP/MILP backend lost too much precision to
// continue (tiny pivots that persist after refactorization).
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(what) {}
};

}  // namespace slr

#endif
