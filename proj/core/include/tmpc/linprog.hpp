#pragma once

#include <Eigen/SparseCore>
#include <optional>
#include <string>
#include <vector>

#include "tmpc/types.hpp"

namespace tmpc {

/* Linear program in the form
 *
 *   minimize    c . y
 *   subject to  G y <= g
 *               E y  = e
 *
 * with y free.  All geometry and control routines in the library funnel
 * their optimization needs through this one interface, so the solver can be
 * swapped out wholesale if a mature LP package becomes available.
 */
struct LpProblem {
  Vec c;
  Mat G;
  Vec g;
  Mat E{0, 0};  // 0 x n when there are no equalities
  Vec e{};

  /* Optional one-name-per-column map, for diagnostics and tests. */
  std::vector<std::string> col_names;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_ineq() const { return static_cast<int>(G.rows()); }
  int num_eq() const { return static_cast<int>(E.rows()); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(LpStatus s);

struct LpResult {
  LpStatus status = LpStatus::NumericalFailure;
  Vec y;                   // primal solution (valid when Optimal)
  double objective = 0.0;  // c . y
  int iterations = 0;
  std::vector<int> basis;  // opaque warm-start handle for CompiledLp::solve
};

struct SimplexOptions {
  double feas_tol = 1e-9;    // basic-variable nonnegativity slack
  double cost_tol = 1e-9;    // reduced-cost optimality threshold
  double pivot_tol = 1e-10;  // smallest acceptable pivot element
  int max_iterations = 200000;
  int refactor_every = 120;  // rebuild the basis inverse periodically
  bool check_residuals = true;
};

/* A solver instance bound to fixed constraint geometry (G, E) and objective
 * c.  The right-hand sides g and e may vary between solves, which covers the
 * two hot loops of the controller: sweeping initial states over a grid and
 * re-solving along a closed-loop trajectory.  Internally the dual is solved
 * in standard form -- the programs built here have few variables and many
 * inequalities, so the dual basis stays small -- and the original solution
 * is read off the simplex multipliers.  A basis returned from one solve
 * remains primal feasible for the internal program under any new (g, e), so
 * warm starts skip phase 1 entirely.  Instances are const and safe to share
 * across threads; per-solve state lives on the caller's stack.
 */
class CompiledLp {
 public:
  explicit CompiledLp(const LpProblem& problem, SimplexOptions options = {});

  /* Solve with the bound geometry and fresh right-hand sides.  `warm` is a
   * basis returned by an earlier solve of the same instance; it is validated
   * and silently discarded if unusable. */
  LpResult solve(const Vec& g, const Vec& e,
                 const std::vector<int>* warm = nullptr) const;

  int num_vars() const { return n_vars_; }

 private:
  LpResult solve_impl(const Vec& g, const Vec& e, const std::vector<int>* warm,
                      bool allow_unbounded_probe) const;

  // The programs built by this library are very sparse (a tube row touches
  // a handful of the thousands of columns), and simplex pricing streams the
  // whole matrix once per iteration, so both copies are kept compressed.
  using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  SpMat stack_;  // [G; E; -E], original signs (residual checks, elastic probe)
  SpMat at_;     // stack_ with columns sign-flipped so the internal rhs >= 0
  Vec flip_;     // per-column sign applied in at_
  Vec bstd_;     // |{-c}| : right-hand side of the internal standard form
  int n_vars_ = 0;
  int n_ineq_ = 0;
  int n_eq_ = 0;
  SimplexOptions opt_;
};

/* One-shot convenience wrapper. */
LpResult solve_lp(const LpProblem& problem, SimplexOptions options = {});

}  // namespace tmpc
