#include "tmpc/doa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include "tmpc/errors.hpp"

namespace tmpc {

int DoaGridSpec::total() const {
  int n = 1;
  for (int c : counts) n *= c;
  return n;
}

Vec DoaGridSpec::point(int flat) const {
  const int dims = static_cast<int>(counts.size());
  Vec x(dims);
  for (int a = dims - 1; a >= 0; --a) {
    const int idx = flat % counts[a];
    flat /= counts[a];
    x(a) = (counts[a] == 1)
               ? lo(a)
               : lo(a) + (hi(a) - lo(a)) * idx / (counts[a] - 1);
  }
  return x;
}

DoaGridSpec default_grid(const LpvSystem& sys) {
  const auto& verts = sys.state_constraints.vertices();
  const int n = sys.state_dim();
  DoaGridSpec spec;
  spec.lo = Vec::Constant(n, std::numeric_limits<double>::infinity());
  spec.hi = Vec::Constant(n, -std::numeric_limits<double>::infinity());
  for (const Vec& v : verts) {
    spec.lo = spec.lo.cwiseMin(v);
    spec.hi = spec.hi.cwiseMax(v);
  }
  if (n == 2)
    spec.counts = {41, 101};
  else
    spec.counts.assign(n, 21);
  return spec;
}

const char* to_string(CellStatus s) {
  switch (s) {
    case CellStatus::Feasible:
      return "feasible";
    case CellStatus::OutsideState:
      return "outside-state";
    case CellStatus::LpInfeasible:
      return "lp-infeasible";
    case CellStatus::Failure:
      return "failure";
  }
  return "?";
}

int DoaGrid::feasible_count() const {
  return static_cast<int>(
      std::count(cells.begin(), cells.end(), CellStatus::Feasible));
}

namespace {

// The flat index of the reflected grid point -x (valid only when the grid
// is origin-centered, so reflection permutes the sample points).
int mirror_flat(const DoaGridSpec& spec, int flat) {
  int mirrored = 0, stride = 1;
  for (int a = static_cast<int>(spec.counts.size()) - 1; a >= 0; --a) {
    const int idx = flat % spec.counts[a];
    flat /= spec.counts[a];
    mirrored += (spec.counts[a] - 1 - idx) * stride;
    stride *= spec.counts[a];
  }
  return mirrored;
}

bool grid_origin_centered(const DoaGridSpec& spec) {
  for (int a = 0; a < static_cast<int>(spec.counts.size()); ++a) {
    const double span = std::max(1.0, std::abs(spec.hi(a)));
    if (spec.counts[a] == 1) {
      if (std::abs(spec.lo(a)) > 1e-12 * span) return false;
    } else if (std::abs(spec.lo(a) + spec.hi(a)) > 1e-12 * span) {
      return false;
    }
  }
  return true;
}

// Feasibility from x implies feasibility from -x (same scheduling signal):
// negating every center and control maps one feasible tube plan onto
// another when the constraint sets and all shape sets equal their own
// negations.  The cost rows bound both signs of each norm row, so the
// mirrored plan also has the same objective.
bool problem_negation_symmetric(const MpcConfig& config) {
  if (!negation_symmetric(config.sys.state_constraints)) return false;
  if (!negation_symmetric(config.sys.input_constraints)) return false;
  for (const auto& s : config.ingredients.seq.sets)
    if (!negation_symmetric(s)) return false;
  return true;
}

}  // namespace

DoaGrid doa_map(const MpcConfig& config, const DoaGridSpec& spec,
                const Vec& theta0, int workers) {
  config.validate();
  if (spec.counts.empty() ||
      static_cast<int>(spec.counts.size()) != config.sys.state_dim() ||
      spec.lo.size() != spec.hi.size() ||
      spec.lo.size() != static_cast<int>(spec.counts.size()))
    throw ConfigError("grid specification does not match the state dimension");
  for (int c : spec.counts)
    if (c < 1) throw ConfigError("grid counts must be positive");
  if (!theta_admissible(config.sys, theta0))
    throw ThetaRangeError("initial scheduling value escapes its set");

  DoaGrid grid;
  grid.spec = spec;
  grid.theta0 = theta0;
  grid.cells.assign(spec.total(), CellStatus::Failure);

  if (workers <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    workers = static_cast<int>(std::min(8u, std::max(1u, hw)));
  }

  // Split on the outer axis so each worker sweeps contiguous inner runs and
  // can chain the simplex basis between neighbouring cells.
  const int outer = spec.counts.front();
  const int inner = spec.total() / outer;
  const bool mirrored =
      grid_origin_centered(spec) && problem_negation_symmetric(config);
  const int rows_to_solve = mirrored ? (outer + 1) / 2 : outer;
  workers = std::min(workers, rows_to_solve);

  const auto sweep = [&](int first_row, int last_row) {
    const TubeLpTemplate tpl(config, 0);
    std::vector<int> basis;
    for (int row = first_row; row < last_row; ++row) {
      basis.clear();  // restart the chain per row: neighbours change
      for (int j = 0; j < inner; ++j) {
        const int flat = row * inner + j;
        const Vec x = spec.point(flat);
        if (!contains_point(config.sys.state_constraints, x, 1e-9)) {
          grid.cells[flat] = CellStatus::OutsideState;
          continue;
        }
        std::vector<int> bout;
        const StepResult res =
            tpl.solve(x, theta0, basis.empty() ? nullptr : &basis, &bout);
        switch (res.status) {
          case StepStatus::Optimal:
            grid.cells[flat] = CellStatus::Feasible;
            basis = std::move(bout);
            break;
          case StepStatus::Infeasible:
            grid.cells[flat] = CellStatus::LpInfeasible;
            break;
          case StepStatus::NumericalFailure:
            grid.cells[flat] = CellStatus::Failure;
            basis.clear();
            break;
        }
      }
    }
  };

  if (workers == 1) {
    sweep(0, rows_to_solve);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (rows_to_solve + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int first = w * chunk;
      const int last = std::min(rows_to_solve, first + chunk);
      if (first >= last) break;
      pool.emplace_back(sweep, first, last);
    }
    for (auto& th : pool) th.join();
  }
  if (mirrored)
    for (int flat = 0; flat < rows_to_solve * inner; ++flat)
      grid.cells[mirror_flat(spec, flat)] = grid.cells[flat];
  return grid;
}

void write_doa_csv(const DoaGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  const int n = static_cast<int>(grid.spec.counts.size());
  std::string line;
  for (int c = 0; c < n; ++c) {
    if (c) line += ',';
    line += "x" + std::to_string(c + 1);
  }
  line += ",status\n";
  out << line;
  char buf[32];
  for (int flat = 0; flat < grid.spec.total(); ++flat) {
    const Vec x = grid.spec.point(flat);
    line.clear();
    for (int c = 0; c < n; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", x(c));
      if (c) line += ',';
      line += buf;
    }
    line += ',';
    line += to_string(grid.cells[flat]);
    line += '\n';
    out << line;
  }
}

}  // namespace tmpc
