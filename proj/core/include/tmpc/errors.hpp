#pragma once

#include <stdexcept>
#include <string>

namespace tmpc {

/* Base class for all exceptions thrown by this library.  Expected outcomes
 * (an infeasible optimization, a synthesis that fails to contract, ...) are
 * reported through result types instead; exceptions are reserved for
 * malformed inputs and numerical breakdowns. */
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/* Input of the wrong size (vector/matrix dimensions disagree). */
struct DimensionError : Error {
  using Error::Error;
};

/* Point set or halfspace system that does not describe a bounded,
 * full-dimensional polytope. */
struct DegenerateInputError : Error {
  using Error::Error;
};

/* Halfspace system with an unbounded feasible region. */
struct UnboundedSetError : Error {
  using Error::Error;
};

/* Halfspace system with an empty feasible region. */
struct EmptySetError : Error {
  using Error::Error;
};

/* Operation that requires a proper C-set (compact, convex, origin in the
 * interior) was handed something else. */
struct PcSetError : Error {
  using Error::Error;
};

/* Negative scaling factor where only nonnegative ones make sense. */
struct NegativeScalingError : Error {
  using Error::Error;
};

/* Dimension not covered by the exact algorithms in this library. */
struct UnsupportedError : Error {
  using Error::Error;
};

/* Scheduling parameter outside its admissible polytope. */
struct ThetaRangeError : Error {
  using Error::Error;
};

/* Configuration file/object that is inconsistent or incomplete. */
struct ConfigError : Error {
  using Error::Error;
};

/* Fixed-point iteration exhausted its iteration budget. */
struct ConvergenceError : Error {
  using Error::Error;
};

/* Closed-loop run cannot start: initial state outside the controller's
 * feasible domain. */
struct InfeasibleStartError : Error {
  using Error::Error;
};

/* The simplex engine lost feasibility/optimality certificates beyond the
 * advertised tolerances and could not recover. */
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace tmpc
