#pragma once

#include <vector>

#include "tmpc/polytope.hpp"
#include "tmpc/types.hpp"

namespace tmpc {

/* Discrete-time constrained system with affine scheduling dependence,
 *
 *   x(k+1) = A(theta(k)) x(k) + B u(k),
 *   A(theta) = A0 + sum_i theta_i * Ai,
 *
 * theta ranging over a polytope, and proper C-set state/input constraints.
 * The input matrix is constant by assumption: it is what lets vertex-wise
 * control feasibility extend to whole sets by convex interpolation, and the
 * loaders reject models that would break it.
 */
struct LpvSystem {
  Mat a0;
  std::vector<Mat> ai;
  Mat b;
  Polytope theta;              // scheduling range, dim == ai.size()
  Polytope state_constraints;  // proper C-set in the state space
  Polytope input_constraints;  // proper C-set in the input space

  int state_dim() const { return static_cast<int>(a0.rows()); }
  int input_dim() const { return static_cast<int>(b.cols()); }
  int scheduling_dim() const { return static_cast<int>(ai.size()); }

  /* Structural checks; throws on violation. */
  void validate() const;
};

/* Evaluate A(theta).  theta is not range-checked here: probing vertex and
 * out-of-range values is legitimate diagnostic use. */
Mat a_of_theta(const LpvSystem& sys, const Vec& theta);

bool theta_admissible(const LpvSystem& sys, const Vec& theta,
                      double tol = kGeomEps);

/* Scheduling information available to the optimizer at time k: the current
 * value is measured exactly, future values are only known to lie in
 * polytopic subsets of the range. */
struct SchedulingSequence {
  std::vector<Polytope> sets;  // sets[0] is the singleton {theta(k)}

  int horizon() const { return static_cast<int>(sets.size()); }
};

enum class SchedulingMode {
  MeasuredThenFull,  // exact now, the whole range afterwards (default)
  RateBounded        // exact now, range intersected with a growing rate box
};

struct SchedulingModel {
  SchedulingMode mode = SchedulingMode::MeasuredThenFull;
  double rate = 0.0;  // per-step infinity-norm bound, RateBounded only
};

/* Build the sets consulted at prediction steps 0..horizon-1.  Throws
 * ThetaRangeError when theta_now lies outside the admissible range. */
SchedulingSequence make_scheduling_sequence(const LpvSystem& sys,
                                            const Vec& theta_now, int horizon,
                                            const SchedulingModel& model = {});

/* One-step consistency between consecutive scheduling sequences: every set
 * used at time k+1 must fit inside its one-step-older counterpart (this is
 * what lets a shifted plan stay feasible). */
bool scheduling_consistent(const SchedulingSequence& at_k,
                           const SchedulingSequence& at_k_plus_1,
                           double tol = 1e-7);

}  // namespace tmpc
