#pragma once

// JSON persistence for the domain objects and the bundled problem setup the
// CLI consumes.  Formats are plain nested arrays/objects; numbers round-trip
// at full precision.

#include <string>
#include <utility>
#include <vector>

#include "tmpc/contractive.hpp"
#include "tmpc/lpv_system.hpp"
#include "tmpc/polytope.hpp"
#include "tmpc/terminal_cost.hpp"
#include "tmpc/types.hpp"

namespace tmpc {

// One config file bundles the system, constraint sets, controller tuning and
// the reference initial conditions.
struct ProblemSetup {
  LpvSystem sys;
  int horizon = 8;
  Mat q, r;
  double lambda = 0.95;
  int m_max = 10;
  SchedulingModel scheduling;
  Vec x0;      // default initial state for closed-loop runs
  Vec theta0;  // default initial scheduling value for feasibility maps
  std::string terminal_kind = "maxset";  // "maxset" or "finite-step"
  int seed_vertices = 4;  // seed-shape size for finite-step synthesis
};

// Throws ConfigError on malformed files; rejects parameter-dependent input
// matrices (a "bi" entry with any nonzero coefficient).
ProblemSetup load_setup(const std::string& path);

void save_polytope(const Polytope& p, const std::string& path);
Polytope load_polytope(const std::string& path);

void save_sequence(const ContractiveSequence& seq, const std::string& path);
ContractiveSequence load_sequence(const std::string& path);

void save_ingredients(const TerminalIngredients& ing, const std::string& path);
TerminalIngredients load_ingredients(const std::string& path);

// Flat JSON object of string fields, for run metadata.
void save_run_meta(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& fields);

}  // namespace tmpc
