#pragma once

// Closed-loop simulation: apply the tube controller step by step, advance the
// plant x(k+1) = A(theta(k)) x(k) + B u(k), and record everything needed for
// plots and audits.  Scheduling trajectories come from a seedable policy so
// identical (config, seed) pairs reproduce bit-identical runs.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tmpc/tube_mpc.hpp"
#include "tmpc/types.hpp"

namespace tmpc {

enum class ThetaPolicyKind { RandomMixture, Held, Scripted };

// RandomMixture draws theta(k) as a convex combination of the scheduling
// set's vertices with flat-Dirichlet weights (covers the whole polytope).
// The first sample can be pinned: the feasible domain depends on the measured
// theta(0), so reproducing a run that starts on the edge of that domain
// requires fixing theta(0) while leaving the rest of the trajectory random.
// Held repeats a fixed value; Scripted replays a given list.
struct ThetaPolicy {
  ThetaPolicyKind kind = ThetaPolicyKind::RandomMixture;
  Vec held;
  std::vector<Vec> script;
  Vec pinned_first;  // used at k = 0 by RandomMixture when nonzero-sized

  static ThetaPolicy random_mixture();
  static ThetaPolicy random_mixture_from(Vec theta0);
  static ThetaPolicy held_at(Vec value);
  static ThetaPolicy scripted(std::vector<Vec> values);
};

struct SimStep {
  int k = 0;
  Vec x, u, theta;
  double value = 0.0;
  StepStatus status = StepStatus::NumericalFailure;
  int n_d = 0, n_ineq = 0;  // built program size at this step
  Vec alpha;                // optimized tube scalings
  double gamma = 0.0;
  int iterations = 0;
  double max_violation = 0.0;
};

struct SimulationRun {
  std::vector<SimStep> steps;
  Vec x_final;
  std::uint64_t seed = 0;
  bool completed = false;  // every step solved to optimality
  int fail_step = -1;      // first non-optimal step, -1 if none
};

// Runs `steps` controller samples from x0.  Throws InfeasibleStartError when
// x0 violates the state constraints or the first program is infeasible; a
// later failure (which recursive feasibility rules out for admissible
// scheduling) stops the run and is recorded, not thrown.
SimulationRun simulate(const MpcConfig& config, const Vec& x0,
                       const ThetaPolicy& policy, int steps,
                       std::uint64_t seed);

// CSV writers.  Fixed column sets; %.17g numbers so round-trips are exact.
// trajectory: k, x_*, u_*, theta_*, V, n_d, n_ineq, status
// diagnostics: k, status, iterations, max_violation, gamma, alpha_0..alpha_N
void write_trajectory_csv(const SimulationRun& run, const std::string& path);
void write_diagnostics_csv(const SimulationRun& run, const std::string& path);

// The scheduling draw used by RandomMixture, exposed for tests: flat
// Dirichlet weights over the vertex list via normalized exponentials.  Draws
// raw engine words and maps them to (0,1) by hand, so results are identical
// across standard libraries.
Vec random_theta(const std::vector<Vec>& vertices, std::mt19937_64& rng);

}  // namespace tmpc
