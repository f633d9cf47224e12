#include "tmpc/lpv_system.hpp"

#include "tmpc/errors.hpp"

namespace tmpc {

void LpvSystem::validate() const {
  const int n = state_dim();
  if (n < 1) throw DimensionError("system: empty state matrix");
  if (a0.cols() != n) throw DimensionError("system: A0 must be square");
  for (const Mat& m : ai) {
    if (m.rows() != n || m.cols() != n)
      throw DimensionError("system: every Ai must match A0");
  }
  if (b.rows() != n) throw DimensionError("system: B row count mismatch");
  if (b.cols() < 1) throw DimensionError("system: B has no input columns");
  if (theta.dim() != scheduling_dim())
    throw DimensionError("system: scheduling polytope dimension mismatch");
  if (state_constraints.dim() != n)
    throw DimensionError("system: state constraint dimension mismatch");
  if (input_constraints.dim() != input_dim())
    throw DimensionError("system: input constraint dimension mismatch");
  if (!state_constraints.is_pc_set())
    throw PcSetError("system: state constraints must form a proper C-set");
  if (!input_constraints.is_pc_set())
    throw PcSetError("system: input constraints must form a proper C-set");
  if (theta.vertices().empty())
    throw DegenerateInputError("system: scheduling range has no vertices");
}

Mat a_of_theta(const LpvSystem& sys, const Vec& theta) {
  if (theta.size() != sys.scheduling_dim())
    throw DimensionError("a_of_theta: scheduling vector size mismatch");
  Mat a = sys.a0;
  for (int i = 0; i < sys.scheduling_dim(); ++i) a += theta[i] * sys.ai[i];
  return a;
}

bool theta_admissible(const LpvSystem& sys, const Vec& theta, double tol) {
  return contains_point(sys.theta, theta, tol);
}

SchedulingSequence make_scheduling_sequence(const LpvSystem& sys,
                                            const Vec& theta_now, int horizon,
                                            const SchedulingModel& model) {
  if (horizon < 1)
    throw DimensionError("scheduling: horizon must be positive");
  if (!theta_admissible(sys, theta_now))
    throw ThetaRangeError("scheduling: measured value outside the range");

  SchedulingSequence seq;
  seq.sets.reserve(static_cast<size_t>(horizon));
  seq.sets.push_back(Polytope::homothety(theta_now, 0.0, sys.theta));

  for (int i = 1; i < horizon; ++i) {
    if (model.mode == SchedulingMode::MeasuredThenFull) {
      seq.sets.push_back(sys.theta);
      continue;
    }
    if (model.rate < 0.0)
      throw ConfigError("scheduling: negative rate bound");
    const double radius = model.rate * i;
    if (radius <= kGeomEps) {
      seq.sets.push_back(Polytope::homothety(theta_now, 0.0, sys.theta));
      continue;
    }
    const int d = sys.scheduling_dim();
    std::vector<Halfspace> rows = sys.theta.halfspaces();
    for (int j = 0; j < d; ++j) {
      rows.push_back(Halfspace{Vec::Unit(d, j), theta_now[j] + radius});
      rows.push_back(Halfspace{-Vec::Unit(d, j), -(theta_now[j] - radius)});
    }
    seq.sets.push_back(Polytope::from_halfspaces(rows));
  }
  return seq;
}

bool scheduling_consistent(const SchedulingSequence& at_k,
                           const SchedulingSequence& at_k_plus_1,
                           double tol) {
  const int n = at_k.horizon();
  if (at_k_plus_1.horizon() != n) return false;
  for (int i = 0; i + 1 < n; ++i) {
    if (!contains_set(at_k.sets[static_cast<size_t>(i + 1)],
                      at_k_plus_1.sets[static_cast<size_t>(i)], tol)) {
      return false;
    }
  }
  return true;
}

}  // namespace tmpc
