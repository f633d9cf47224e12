#pragma once

// Domain-of-attraction mapping: solve the step-0 tube program on a regular
// grid over the state constraints for a fixed initial scheduling value, and
// record per-cell feasibility.  Cells are independent, so the sweep is
// partitioned across a small worker pool; within a worker the simplex basis
// is chained from cell to cell, which is what makes dense grids cheap.
//
// When every set in the problem (state/input constraints and all tube shape
// sets) equals its own negation and the grid is centered on the origin, a
// feasible plan from x mirrors to one from -x under the same scheduling
// signal, so only half the grid is solved and the rest is reflected.

#include <cstdint>
#include <string>
#include <vector>

#include "tmpc/tube_mpc.hpp"
#include "tmpc/types.hpp"

namespace tmpc {

struct DoaGridSpec {
  Vec lo, hi;               // per-axis ranges
  std::vector<int> counts;  // per-axis sample counts (>= 2)

  int total() const;
  // Cell coordinates from the row-major flat index (last axis fastest).
  Vec point(int flat) const;
};

// Axis-aligned bounding box of the state constraints sampled 41 x 101 in
// 2-D (matching the 4:10 side ratio of the reference constraints, 0.2
// spacing on both axes) and 21 per axis otherwise.
DoaGridSpec default_grid(const LpvSystem& sys);

enum class CellStatus : unsigned char {
  Feasible = 0,
  OutsideState = 1,  // violates the state constraints; never solved
  LpInfeasible = 2,  // admissible state, empty program
  Failure = 3,       // solver failure (should not occur)
};

const char* to_string(CellStatus s);

struct DoaGrid {
  DoaGridSpec spec;
  Vec theta0;
  std::vector<CellStatus> cells;  // row-major, last axis fastest

  int feasible_count() const;
};

// workers <= 0 picks min(8, hardware concurrency).  Output is identical for
// any worker count.
DoaGrid doa_map(const MpcConfig& config, const DoaGridSpec& spec,
                const Vec& theta0, int workers = 0);

// CSV: x_1..x_n, status (one row per cell, row-major order).
void write_doa_csv(const DoaGrid& grid, const std::string& path);

}  // namespace tmpc
