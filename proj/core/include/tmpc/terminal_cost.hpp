#pragma once

// Terminal ingredients for the tube controller: per-set stage-cost bounds,
// the periodic contraction rates, the set-gauge Lyapunov-type function W and
// the terminal cost built from it.  Everything is derived from a verified
// contractive sequence together with the stage weights (Q, R); all norms are
// infinity norms.

#include <vector>

#include "tmpc/contractive.hpp"
#include "tmpc/lpv_system.hpp"
#include "tmpc/polytope.hpp"
#include "tmpc/types.hpp"

namespace tmpc {

struct ContractionRates {
  std::vector<double> rho_k;  // indexed by sigma(k) = k mod M
  double rho = 0.0;           // max over k, attained at k = 0
};

// Periodic contraction rates of W: for sigma(k) <= M-2 the ratio of
// successive scale factors (M + (lambda-1) sigma), and lambda*M /
// (lambda*(M-1) + 1) at the wrap-around.  Their product over one period is
// exactly lambda.
ContractionRates contraction_rates(int m, double lambda);

// Minimum-input-penalty vertex controls: for every (set i, vertex j,
// scheduling vertex l) the input minimizing ||R u|| subject to the image
// landing in the next set (lambda * S_0 at the wrap-around) and u being
// admissible.  The state term ||Q s_i^j|| of the stage cost does not depend
// on u, so this minimizes the full vertex stage cost.  Throws NumericalError
// if some program is infeasible (the sequence then failed verification).
std::vector<std::vector<std::vector<Vec>>> terminal_vertex_controls(
    const LpvSystem& sys, const ContractiveSequence& seq, const Mat& q,
    const Mat& r);

struct StageBounds {
  // Per-set worst vertex stage cost max_{j,l} (||Q s|| + ||R u||) and its
  // max over sets.  This is the constant the set-valued decrease results
  // are stated with.
  std::vector<double> ell_bar_i;
  double ell_bar = 0.0;
  // Decoupled variant max_j ||Q s|| + max_{j,l} ||R u|| (>= ell_bar_i).  The
  // online program bounds state and input costs by separate per-step
  // scalars, so its value function telescopes against this constant, not
  // against ell_bar; using it in the terminal coefficient is what makes the
  // closed-loop value decrease provable for the implemented objective.
  std::vector<double> ell_epi_i;
  double ell_epi = 0.0;
};

StageBounds stage_upper_bounds(
    const ContractiveSequence& seq,
    const std::vector<std::vector<std::vector<Vec>>>& controls, const Mat& q,
    const Mat& r);

struct TerminalIngredients {
  ContractiveSequence seq;
  std::vector<double> ell_bar_i;
  double ell_bar = 0.0;
  std::vector<double> ell_epi_i;
  double ell_epi = 0.0;
  std::vector<double> rho_k;
  double rho = 0.0;
  std::vector<std::vector<std::vector<Vec>>> terminal_controls;  // (i,j,l)
  Mat q;  // state stage weight
  Mat r;  // input stage weight

  int period() const { return seq.period(); }
};

// Verify the sequence, compute the terminal controls and assemble all
// constants.  Q may be rank-deficient here (useful for studying the bounds
// in isolation); the online controller enforces full rank at configuration.
TerminalIngredients make_terminal_ingredients(const LpvSystem& sys,
                                              const ContractiveSequence& seq,
                                              const Mat& q, const Mat& r);

// Scale factor M + (lambda-1) sigma(k) of the Lyapunov-type function.
double lyapunov_scale(const TerminalIngredients& ing, int k);

// W(k, X) = (M + (lambda-1) sigma(k)) * Psi_{sigma(k)}(X).
double lyapunov_w(const TerminalIngredients& ing, int k, const Polytope& x);

// W-bar(k, X) = (ell_bar / (1 - rho)) * W(k, X): the summed tail bound that
// decreases by at least ell_bar * W(k, X) along the set dynamics.
double lyapunov_w_bar(const TerminalIngredients& ing, int k, const Polytope& x);

// Terminal cost of a homothetic cross-section z + alpha * S_{sigma(time)}:
// F = (ell_bar / (1 - rho)) * (M + (lambda-1) sigma) * Psi_sigma(z + alpha S).
// Positively homogeneous of degree one in (z, alpha) jointly.
double terminal_cost(const TerminalIngredients& ing, int time_index,
                     const Vec& z, double alpha);

// Coefficient the online program puts on the terminal gauge level:
// (ell_epi / (1 - rho)) * (M + (lambda-1) sigma(time)).  Uses the decoupled
// bound so the program's value function provably decreases (see StageBounds).
double terminal_cost_coefficient(const TerminalIngredients& ing,
                                 int time_index);

// Affine representation of the homothetic gauge: Psi_S(z + alpha * T) =
// max over rows of a_z . z + a_alpha * alpha (valid for alpha >= 0).  One
// row per (facet of S, vertex of T); with T = S this feeds the terminal
// rows of the online program.
struct GaugeRow {
  Vec a_z;
  double a_alpha = 0.0;
};

std::vector<GaugeRow> homothetic_gauge_rows(const Polytope& s, const Polytope& t);

}  // namespace tmpc
