#include "tmpc/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tmpc/errors.hpp"

namespace tmpc {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
// Basis inverse storage: the pivot update rewrites whole rows, so row-major
// keeps those sweeps contiguous.
using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/* Internal standard-form program
 *
 *   minimize  cost . w   subject to  A w = b,  w >= 0,  b >= 0,
 *
 * solved with a revised primal simplex: dense explicit basis inverse,
 * Dantzig pricing with a Bland fallback after degenerate stalls, periodic
 * refactorization.  The matrix arrives transposed (`at` row j is column j of
 * A) and compressed, so pricing costs one sparse mat-vec and entering
 * directions are short combinations of basis-inverse columns.  Artificial
 * columns for phase 1 are implicit unit vectors appended after the
 * structural columns.
 */
struct StandardSimplex {
  const SpMat& at;  // n_cols x m
  const Vec& b;     // m, nonnegative
  const SimplexOptions& opt;

  int m;
  int n_cols;

  std::vector<int> basis;  // m column indices; >= n_cols means artificial
  RowMat binv;             // m x m
  Vec xb;                  // basic values
  int iterations = 0;

  StandardSimplex(const SpMat& at_in, const Vec& b_in, const SimplexOptions& o)
      : at(at_in), b(b_in), opt(o),
        m(static_cast<int>(at_in.cols())),
        n_cols(static_cast<int>(at_in.rows())) {}

  bool is_artificial(int col) const { return col >= n_cols; }

  Vec column(int col) const {
    if (is_artificial(col)) return Vec::Unit(m, col - n_cols);
    Vec v = Vec::Zero(m);
    for (SpMat::InnerIterator it(at, col); it; ++it) v[it.index()] = it.value();
    return v;
  }

  bool refactor() {
    Mat bmat(m, m);
    for (int i = 0; i < m; ++i) bmat.col(i) = column(basis[i]);
    Eigen::FullPivLU<Mat> lu(bmat);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) return false;
    binv = lu.inverse();
    xb = binv * b;
    return true;
  }

  void start_phase1() {
    basis.resize(m);
    for (int i = 0; i < m; ++i) basis[i] = n_cols + i;
    binv = RowMat::Identity(m, m);
    xb = b;
  }

  /* Install a caller-provided basis if it is nonsingular and still primal
   * feasible (always the case when only the objective side of the original
   * problem changed since it was produced). */
  bool adopt(const std::vector<int>& warm) {
    if (static_cast<int>(warm.size()) != m) return false;
    std::vector<int> seen(warm);
    for (int c : seen)
      if (c < 0 || c >= n_cols + m) return false;
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
      return false;
    basis = warm;
    if (!refactor()) return false;
    return xb.minCoeff() >= -opt.feas_tol;
  }

  enum class RunOutcome { Optimal, Unbounded, IterationLimit, Singular };

  /* `phase1` prices the artificial columns (at unit cost) as well and
   * permits them to re-enter; phase 2 locks them out and guards against
   * basic artificials regrowing. */
  RunOutcome run(const Vec& cost, bool phase1) {
    int degenerate_run = 0;
    bool bland = false;
    int since_refactor = 0;

    Vec cb(m);
    auto load_cb = [&] {
      for (int i = 0; i < m; ++i)
        cb[i] = basis[i] < n_cols ? cost[basis[i]]
                                  : (phase1 ? 1.0 : 0.0);
    };
    load_cb();

    Vec pi(m), red(n_cols), dir(m);  // per-iteration scratch
    while (iterations < opt.max_iterations) {
      ++iterations;

      pi.noalias() = binv.transpose() * cb;
      red = cost;  // structural reduced costs
      red -= at * pi;

      int enter = -1;
      if (!bland) {
        double best = -opt.cost_tol;
        for (int j = 0; j < n_cols; ++j)
          if (red[j] < best) { best = red[j]; enter = j; }
        if (phase1) {
          for (int i = 0; i < m; ++i) {
            const double rc = 1.0 - pi[i];
            if (rc < best) { best = rc; enter = n_cols + i; }
          }
        }
      } else {
        for (int j = 0; j < n_cols && enter < 0; ++j)
          if (red[j] < -opt.cost_tol) enter = j;
        if (phase1 && enter < 0) {
          for (int i = 0; i < m && enter < 0; ++i)
            if (1.0 - pi[i] < -opt.cost_tol) enter = n_cols + i;
        }
      }
      if (enter < 0) return RunOutcome::Optimal;

      if (is_artificial(enter)) {
        dir = binv.col(enter - n_cols);
      } else {
        dir.setZero();
        for (SpMat::InnerIterator it(at, enter); it; ++it)
          dir.noalias() += it.value() * binv.col(it.index());
      }

      /* Phase 2 guard: a basic artificial whose value would grow would
       * silently violate an original equality; expel it with a degenerate
       * pivot on its (negative) direction entry instead. */
      int leave = -1;
      if (!phase1) {
        for (int i = 0; i < m; ++i) {
          if (is_artificial(basis[i]) && dir[i] < -opt.pivot_tol &&
              xb[i] <= opt.feas_tol) {
            leave = i;
            break;
          }
        }
      }

      double step = 0.0;
      if (leave < 0) {
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < m; ++i) {
          if (dir[i] <= opt.pivot_tol) continue;
          const double ratio = std::max(xb[i], 0.0) / dir[i];
          if (leave < 0 || ratio < best_ratio - 1e-12) {
            best_ratio = ratio;
            leave = i;
          } else if (ratio <= best_ratio + 1e-12) {
            /* Tie-break.  Under Bland's rule the smallest basis index must
             * win unconditionally or the anti-cycling guarantee is void;
             * otherwise prefer expelling artificials first. */
            if (bland) {
              if (basis[i] < basis[leave]) leave = i;
            } else {
              const bool cand_art = is_artificial(basis[i]);
              const bool cur_art = is_artificial(basis[leave]);
              if ((cand_art && !cur_art) ||
                  (cand_art == cur_art && basis[i] < basis[leave])) {
                leave = i;
              }
            }
          }
        }
        if (leave < 0) return RunOutcome::Unbounded;
        step = std::max(xb[leave], 0.0) / dir[leave];
      }

      if (step <= 1e-13) {
        if (++degenerate_run > 50) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      const double pivot = dir[leave];
      xb -= step * dir;
      xb[leave] = step;
      for (int i = 0; i < m; ++i) {
        if (i == leave) continue;
        const double f = dir[i] / pivot;
        if (f != 0.0) binv.row(i) -= f * binv.row(leave);
      }
      binv.row(leave) /= pivot;
      basis[leave] = enter;
      cb[leave] = is_artificial(enter) ? (phase1 ? 1.0 : 0.0) : cost[enter];

      if (++since_refactor >= opt.refactor_every) {
        since_refactor = 0;
        if (!refactor()) return RunOutcome::Singular;
        if (xb.minCoeff() < -1e-6) return RunOutcome::Singular;
        xb = xb.cwiseMax(0.0);
      }
    }
    return RunOutcome::IterationLimit;
  }

  double phase1_objective() const {
    double s = 0.0;
    for (int i = 0; i < m; ++i)
      if (is_artificial(basis[i])) s += std::max(xb[i], 0.0);
    return s;
  }

  /* After a successful phase 1, swap basic artificials for structural
   * columns where possible.  Rows admitting no replacement are linearly
   * dependent; their artificials stay basic, locked at zero by the phase 2
   * ratio-test guard. */
  void expel_artificials() {
    for (int i = 0; i < m; ++i) {
      if (!is_artificial(basis[i]) || xb[i] > opt.feas_tol) continue;
      const Vec binv_row = binv.row(i).transpose();
      const Vec row = at * binv_row;
      int repl = -1;
      for (int j = 0; j < n_cols && repl < 0; ++j) {
        if (std::abs(row[j]) > 1e-7 &&
            std::find(basis.begin(), basis.end(), j) == basis.end()) {
          repl = j;
        }
      }
      if (repl < 0) continue;
      const Vec dir = binv * column(repl);
      const double pivot = dir[i];
      if (std::abs(pivot) <= opt.pivot_tol) continue;
      for (int r = 0; r < m; ++r) {
        if (r == i) continue;
        const double f = dir[r] / pivot;
        if (f != 0.0) binv.row(r) -= f * binv.row(i);
      }
      binv.row(i) /= pivot;
      basis[i] = repl;
      xb = binv * b;
    }
  }
};

}  // namespace

CompiledLp::CompiledLp(const LpProblem& p, SimplexOptions options)
    : opt_(options) {
  n_vars_ = p.num_vars();
  n_ineq_ = p.num_ineq();
  n_eq_ = p.num_eq();
  if (n_vars_ <= 0) throw DimensionError("lp: no decision variables");
  if (n_ineq_ > 0 && p.G.cols() != n_vars_)
    throw DimensionError("lp: G column count mismatch");
  if (n_eq_ > 0 && p.E.cols() != n_vars_)
    throw DimensionError("lp: E column count mismatch");
  if (p.g.size() != n_ineq_ || p.e.size() != n_eq_)
    throw DimensionError("lp: right-hand side length mismatch");
  if (n_ineq_ + n_eq_ == 0)
    throw DimensionError("lp: program has no constraints");

  flip_ = Vec::Ones(n_vars_);
  bstd_ = -p.c;
  for (int i = 0; i < n_vars_; ++i) {
    if (bstd_[i] < 0.0) {
      flip_[i] = -1.0;
      bstd_[i] = -bstd_[i];
    }
  }

  const int rows = n_ineq_ + 2 * n_eq_;
  std::vector<Eigen::Triplet<double>> plain, flipped;
  const auto add_row = [&](int r, const auto& coeffs, double sign) {
    for (int i = 0; i < n_vars_; ++i) {
      const double v = sign * coeffs(i);
      if (v == 0.0) continue;
      plain.emplace_back(r, i, v);
      flipped.emplace_back(r, i, v * flip_[i]);
    }
  };
  for (int r = 0; r < n_ineq_; ++r) add_row(r, p.G.row(r), 1.0);
  for (int r = 0; r < n_eq_; ++r) {
    add_row(n_ineq_ + r, p.E.row(r), 1.0);
    add_row(n_ineq_ + n_eq_ + r, p.E.row(r), -1.0);
  }
  stack_.resize(rows, n_vars_);
  stack_.setFromTriplets(plain.begin(), plain.end());
  at_.resize(rows, n_vars_);
  at_.setFromTriplets(flipped.begin(), flipped.end());
}

LpResult CompiledLp::solve(const Vec& g, const Vec& e,
                           const std::vector<int>* warm) const {
  return solve_impl(g, e, warm, true);
}

LpResult CompiledLp::solve_impl(const Vec& g, const Vec& e,
                                const std::vector<int>* warm,
                                bool allow_unbounded_probe) const {
  if (g.size() != n_ineq_ || e.size() != n_eq_)
    throw DimensionError("lp: right-hand side length mismatch");

  LpResult res;

  Vec cost(n_ineq_ + 2 * n_eq_);
  if (n_ineq_ > 0) cost.head(n_ineq_) = g;
  if (n_eq_ > 0) {
    cost.segment(n_ineq_, n_eq_) = e;
    cost.tail(n_eq_) = -e;
  }

  StandardSimplex sx(at_, bstd_, opt_);

  const bool warm_ok = warm != nullptr && sx.adopt(*warm);
  if (!warm_ok) {
    sx.start_phase1();
    const Vec zero_cost = Vec::Zero(sx.n_cols);
    const auto out = sx.run(zero_cost, /*phase1=*/true);
    res.iterations = sx.iterations;
    if (out != StandardSimplex::RunOutcome::Optimal) {
      res.status = LpStatus::NumericalFailure;
      return res;
    }
    if (sx.phase1_objective() > 1e-7 * (1.0 + bstd_.maxCoeff())) {
      /* The internal (dual) program is infeasible: the original one is
       * unbounded or infeasible.  An elastic relaxation settles which. */
      if (!allow_unbounded_probe) {
        res.status = LpStatus::NumericalFailure;
        return res;
      }
      const int n = n_vars_;
      const int rows = n_ineq_ + 2 * n_eq_ + 1;
      LpProblem elastic;
      elastic.c = Vec::Zero(n + 1);
      elastic.c[n] = 1.0;
      elastic.G = Mat::Zero(rows, n + 1);
      elastic.G.block(0, 0, n_ineq_ + 2 * n_eq_, n) = Mat(stack_);
      elastic.G.col(n).setConstant(-1.0);
      elastic.G(rows - 1, n) = -1.0;
      for (int j = 0; j < n; ++j) elastic.G(rows - 1, j) = 0.0;
      elastic.g = Vec::Zero(rows);
      elastic.g.head(n_ineq_) = g;
      if (n_eq_ > 0) {
        elastic.g.segment(n_ineq_, n_eq_) = e;
        elastic.g.segment(n_ineq_ + n_eq_, n_eq_) = -e;
      }
      CompiledLp probe(elastic, opt_);
      const LpResult pr =
          probe.solve_impl(elastic.g, elastic.e, nullptr, false);
      const double scale = 1.0 + cost.cwiseAbs().maxCoeff();
      if (pr.status == LpStatus::Optimal) {
        res.status = pr.objective <= 1e-7 * scale ? LpStatus::Unbounded
                                                  : LpStatus::Infeasible;
      } else {
        res.status = LpStatus::NumericalFailure;
      }
      return res;
    }
    sx.expel_artificials();
  }

  const auto out = sx.run(cost, /*phase1=*/false);
  res.iterations = sx.iterations;
  if (out == StandardSimplex::RunOutcome::Unbounded) {
    res.status = LpStatus::Infeasible;  // dual unbounded <=> primal empty
    return res;
  }
  if (out != StandardSimplex::RunOutcome::Optimal) {
    res.status = LpStatus::NumericalFailure;
    return res;
  }

  /* Clean extraction: refresh the inverse, then read the original solution
   * off the simplex multipliers (columns of G price to G y <= g, the +/-
   * equality pairs pin E y = e). */
  if (!sx.refactor()) {
    res.status = LpStatus::NumericalFailure;
    return res;
  }
  Vec cb(sx.m);
  for (int i = 0; i < sx.m; ++i)
    cb[i] = sx.basis[i] < sx.n_cols ? cost[sx.basis[i]] : 0.0;
  const Vec pi = sx.binv.transpose() * cb;
  res.y = flip_.cwiseProduct(pi);
  const Vec c = -flip_.cwiseProduct(bstd_);
  res.objective = c.dot(res.y);
  res.basis = sx.basis;
  res.status = LpStatus::Optimal;

  if (opt_.check_residuals) {
    double viol = 0.0;
    if (n_ineq_ > 0)
      viol = (stack_.topRows(n_ineq_) * res.y - g).maxCoeff();
    double eq_viol = 0.0;
    if (n_eq_ > 0)
      eq_viol = (stack_.middleRows(n_ineq_, n_eq_) * res.y - e)
                    .cwiseAbs()
                    .maxCoeff();
    double dual_obj = 0.0;
    for (int i = 0; i < sx.m; ++i)
      if (sx.basis[i] < sx.n_cols) dual_obj += cost[sx.basis[i]] * sx.xb[i];
    const double scale =
        1.0 + std::abs(res.objective) + cost.cwiseAbs().maxCoeff();
    if (viol > kLpEps * scale || eq_viol > kLpEps * scale ||
        std::abs(dual_obj + res.objective) > 1e-6 * scale) {
      res.status = LpStatus::NumericalFailure;
    }
  }
  return res;
}

LpResult solve_lp(const LpProblem& p, SimplexOptions options) {
  CompiledLp lp(p, options);
  return lp.solve(p.g, p.e);
}

}  // namespace tmpc
