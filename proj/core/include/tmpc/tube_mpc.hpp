#pragma once

// The per-step tube synthesis program.  Cross-sections are homothetic copies
// z_i + alpha_i * S_{sigma(k+i)} of the periodic shape sets; decision
// variables are the centers, scalings, per-(vertex, scheduling vertex)
// controls, per-step cost epigraph scalars and the terminal gauge level.
//
// Variable order (see TubeLayout for offsets):
//   z_0..z_N | alpha_0..alpha_N | u-blocks step 0..N-1 | cx_0 cu_0 .. | gamma
// Step 0 carries a single control: the first cross-section is the measured
// state (alpha_0 = 0) and the scheduling parameter there is measured too, so
// every (j,l) combination collapses to one action -- the input that gets
// applied.
//
// Row order: tube inclusion | successor state | input | state epigraph |
// input epigraph | alpha >= 0 | terminal gauge, gamma <= 1.  Within a block,
// steps ascend with (vertex j, scheduling vertex l, facet/row) nested inner.
// Equalities: z_0 = x(k) (n_x rows), alpha_0 = 0 (1 row).
//
// The constraint matrix depends only on k mod M under the measured-then-full
// scheduling model: the measured (x, theta) enter the right-hand sides alone
// (step-0 successor terms use x(k) as a constant).  TubeLpTemplate exploits
// that to recompile nothing between solves and to reuse simplex bases.

#include <memory>
#include <vector>

#include "tmpc/linprog.hpp"
#include "tmpc/lpv_system.hpp"
#include "tmpc/polytope.hpp"
#include "tmpc/terminal_cost.hpp"
#include "tmpc/types.hpp"

namespace tmpc {

struct MpcConfig {
  LpvSystem sys;
  TerminalIngredients ingredients;
  int horizon = 8;
  Mat q;  // state stage weight, full rank
  Mat r;  // input stage weight
  SchedulingModel scheduling;

  // Dimension/rank checks; the stage weights must be the ones the terminal
  // ingredients were built with.
  void validate() const;
};

struct TubeSolution {
  std::vector<Vec> z;  // centers, 0..N
  Vec alpha;           // scalings, 0..N
  // controls[i][j][l]; step 0 has a single entry controls[0][0][0]
  std::vector<std::vector<std::vector<Vec>>> controls;
  Vec cx, cu;  // per-step cost epigraph values, 0..N-1
  double gamma = 0.0;
  double value = 0.0;
};

enum class StepStatus { Optimal, Infeasible, NumericalFailure };

const char* to_string(StepStatus s);

struct StepResult {
  StepStatus status = StepStatus::NumericalFailure;
  TubeSolution sol;
  Vec u;  // applied input (the step-0 control), empty unless Optimal
  int iterations = 0;
  double max_violation = 0.0;  // post-solve geometric audit residual
};

// Column/row bookkeeping of the built program.
struct TubeLayout {
  int horizon = 0;
  int n_x = 0, n_u = 0;
  std::vector<int> t;        // control vertex count per step 0..N-1 (t[0]=1)
  std::vector<int> q;        // scheduling vertex count per step 0..N-1
  std::vector<int> u_base;   // per-step first control column
  int alpha_base = 0, c_base = 0, gamma_col = 0;
  int num_vars = 0, num_ineq = 0, num_eq = 0;
  int tube0_row = 0, tube0_rows = 0;    // step-0 tube rows (theta-dependent rhs)
  int state0_row = 0, state0_rows = 0;  // step-0 successor state rows

  int z_offset(int i) const { return i * n_x; }
  int alpha_offset(int i) const { return alpha_base + i; }
  int u_offset(int i, int j, int l) const {
    return u_base[i] + ((j * q[i]) + l) * n_u;
  }
  int cx_offset(int i) const { return c_base + 2 * i; }
  int cu_offset(int i) const { return c_base + 2 * i + 1; }
  int gamma_offset() const { return gamma_col; }
};

// Counts of the program we build next to the closed-form counts quoted for
// this construction (which sum control blocks over one extra step and do not
// collapse step 0); both are reported, neither is "corrected" to the other.
struct LpDimensions {
  int built_vars = 0, built_ineq = 0, built_eq = 0;
  int formula_vars = 0, formula_ineq = 0, formula_eq = 0;
};

// Build the program for absolute time k at the measured state/parameter.
// Layout output is optional.
LpProblem build_tube_lp(const MpcConfig& config, int k, const Vec& x_now,
                        const Vec& theta_now, TubeLayout* layout = nullptr);

LpDimensions lp_dimensions(const MpcConfig& config, int k);

// One-shot solve (compiles the program, solves, extracts, audits).  Returns
// Infeasible when x_now (or theta_now) lies outside the controller's domain.
StepResult solve_step(const MpcConfig& config, int k, const Vec& x_now,
                      const Vec& theta_now);

// Worst geometric violation of the tube conditions by a candidate solution:
// vertex-successor inclusions, state/input membership, terminal inclusion,
// scaling signs and the initial equalities.  Pure audit; no solver involved.
double tube_violation(const MpcConfig& config, int k, const Vec& x_now,
                      const Vec& theta_now, const TubeSolution& sol);

// Reusable compiled program for one residue k mod M (measured-then-full
// scheduling only): successive solves patch right-hand sides and can reuse
// the previous basis, which is what makes grid sweeps and long closed-loop
// runs cheap.
class TubeLpTemplate {
 public:
  // Keeps a reference to config: the config must outlive the template.
  TubeLpTemplate(const MpcConfig& config, int k);

  // warm: basis from a previous solve of this template (nullptr = cold).
  // basis_out: receives the final basis for chaining (optional).
  StepResult solve(const Vec& x_now, const Vec& theta_now,
                   const std::vector<int>* warm = nullptr,
                   std::vector<int>* basis_out = nullptr) const;

  const TubeLayout& layout() const { return layout_; }

 private:
  const MpcConfig* cfg_;
  int k_;
  TubeLayout layout_;
  LpProblem base_;
  std::unique_ptr<CompiledLp> compiled_;
  Mat h1_, hx_;   // step-0 facet normals (tube target, state set)
  Vec h1b_, hxb_;
};

// Controller session: caches one template per shape residue and carries the
// warm-start basis from step to step.
class TubeController {
 public:
  explicit TubeController(MpcConfig config);

  const MpcConfig& config() const { return cfg_; }

  StepResult step(int k, const Vec& x_now, const Vec& theta_now);

  // Drop warm-start state (templates are kept).
  void reset();

 private:
  MpcConfig cfg_;
  std::vector<std::unique_ptr<TubeLpTemplate>> templates_;  // by k mod M
  std::vector<std::vector<int>> basis_;                     // by k mod M
};

}  // namespace tmpc
