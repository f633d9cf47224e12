#include "tmpc/tube_mpc.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cstdio>
#include <string>
#include <utility>

#include "tmpc/errors.hpp"

namespace tmpc {
namespace {

// Post-solve audit threshold: solver residuals sit near 1e-9, so anything
// past this is a genuinely broken solution, not roundoff.
constexpr double kAuditTol = 1e-6;

std::string fmt(const char* pattern, int a, int b = -1, int c = -1) {
  char buf[64];
  if (b < 0)
    std::snprintf(buf, sizeof(buf), pattern, a);
  else if (c < 0)
    std::snprintf(buf, sizeof(buf), pattern, a, b);
  else
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

struct BuildContext {
  std::vector<int> sigma;               // shape index per step 0..N
  std::vector<std::vector<Mat>> a_mat;  // A(theta vertex) per step 0..N-1
};

BuildContext make_context(const MpcConfig& cfg, int k, const Vec& theta_now) {
  BuildContext ctx;
  const int n = cfg.horizon;
  ctx.sigma.resize(n + 1);
  for (int i = 0; i <= n; ++i) ctx.sigma[i] = cfg.ingredients.seq.shape_index(k + i);
  const SchedulingSequence ss =
      make_scheduling_sequence(cfg.sys, theta_now, n, cfg.scheduling);
  ctx.a_mat.resize(n);
  for (int i = 0; i < n; ++i) {
    for (const Vec& tv : ss.sets[i].vertices())
      ctx.a_mat[i].push_back(a_of_theta(cfg.sys, tv));
  }
  return ctx;
}

LpProblem build_impl(const MpcConfig& cfg, int k, const Vec& x_now,
                     const Vec& theta_now, TubeLayout* lay_out) {
  cfg.validate();
  const int n = cfg.horizon;
  const int n_x = cfg.sys.state_dim();
  const int n_u = cfg.sys.input_dim();
  if (x_now.size() != n_x) throw DimensionError("state has wrong dimension");
  const auto& seq = cfg.ingredients.seq;
  const BuildContext ctx = make_context(cfg, k, theta_now);

  TubeLayout L;
  L.horizon = n;
  L.n_x = n_x;
  L.n_u = n_u;
  L.t.resize(n);
  L.q.resize(n);
  L.u_base.resize(n);
  for (int i = 0; i < n; ++i) {
    L.t[i] = (i == 0) ? 1 : seq.sets[ctx.sigma[i]].num_vertices();
    L.q[i] = static_cast<int>(ctx.a_mat[i].size());
  }
  L.alpha_base = (n + 1) * n_x;
  int col = L.alpha_base + (n + 1);
  for (int i = 0; i < n; ++i) {
    L.u_base[i] = col;
    col += L.t[i] * L.q[i] * n_u;
  }
  L.c_base = col;
  L.gamma_col = L.c_base + 2 * n;
  L.num_vars = L.gamma_col + 1;

  const int r_x = cfg.sys.state_constraints.num_halfspaces();
  const int r_u = cfg.sys.input_constraints.num_halfspaces();
  const Polytope& s_term = seq.sets[ctx.sigma[n]];
  int n_rows = 0;
  for (int i = 0; i < n; ++i) {
    const int combos = L.t[i] * L.q[i];
    n_rows += combos * seq.sets[ctx.sigma[i + 1]].num_halfspaces();  // tube
    n_rows += combos * r_x;                                          // state
    n_rows += combos * r_u;                                          // input
    n_rows += 2 * n_x * L.t[i];                                      // cx epi
    n_rows += 2 * n_u * combos;                                      // cu epi
  }
  n_rows += n + 1;                                               // alpha >= 0
  n_rows += s_term.num_halfspaces() * s_term.num_vertices() + 1;  // terminal
  L.num_ineq = n_rows;
  L.num_eq = n_x + 1;

  LpProblem p;
  p.c = Vec::Zero(L.num_vars);
  for (int i = 0; i < n; ++i) {
    p.c(L.cx_offset(i)) = 1.0;
    p.c(L.cu_offset(i)) = 1.0;
  }
  p.c(L.gamma_col) = terminal_cost_coefficient(cfg.ingredients, k + n);
  p.G = Mat::Zero(n_rows, L.num_vars);
  p.g = Vec::Zero(n_rows);
  p.E = Mat::Zero(n_x + 1, L.num_vars);
  p.e = Vec::Zero(n_x + 1);

  p.col_names.resize(L.num_vars);
  for (int i = 0; i <= n; ++i) {
    for (int c = 0; c < n_x; ++c)
      p.col_names[L.z_offset(i) + c] = fmt("z%d[%d]", i, c);
    p.col_names[L.alpha_offset(i)] = fmt("alpha%d", i);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < L.t[i]; ++j)
      for (int l = 0; l < L.q[i]; ++l)
        for (int c = 0; c < n_u; ++c)
          p.col_names[L.u_offset(i, j, l) + c] =
              fmt("u%d[%d,%d]", i, j, l) + fmt("[%d]", c);
    p.col_names[L.cx_offset(i)] = fmt("cx%d", i);
    p.col_names[L.cu_offset(i)] = fmt("cu%d", i);
  }
  p.col_names[L.gamma_col] = "gamma";

  const Vec ax = ctx.a_mat[0][0] * x_now;  // step-0 successor constant
  int row = 0;

  // (a) tube inclusion: successors of section vertices land in the next
  // homothetic section.
  L.tube0_row = 0;
  L.tube0_rows = seq.sets[ctx.sigma[1]].num_halfspaces();
  for (int i = 0; i < n; ++i) {
    const auto& target = seq.sets[ctx.sigma[i + 1]].halfspaces();
    const auto& verts = seq.sets[ctx.sigma[i]].vertices();
    for (int j = 0; j < L.t[i]; ++j) {
      for (int l = 0; l < L.q[i]; ++l) {
        const Mat& a_l = ctx.a_mat[i][l];
        for (const auto& hs : target) {
          p.G.row(row).segment(L.u_offset(i, j, l), n_u) =
              (cfg.sys.b.transpose() * hs.a).transpose();
          p.G.row(row).segment(L.z_offset(i + 1), n_x) = -hs.a.transpose();
          p.G(row, L.alpha_offset(i + 1)) = -hs.b;
          if (i == 0) {
            p.g(row) = -hs.a.dot(ax);
          } else {
            p.G.row(row).segment(L.z_offset(i), n_x) =
                (a_l.transpose() * hs.a).transpose();
            p.G(row, L.alpha_offset(i)) = hs.a.dot(a_l * verts[j]);
          }
          ++row;
        }
      }
    }
  }

  // (b) successor state constraints.
  L.state0_row = row;
  L.state0_rows = r_x;
  for (int i = 0; i < n; ++i) {
    const auto& verts = seq.sets[ctx.sigma[i]].vertices();
    for (int j = 0; j < L.t[i]; ++j) {
      for (int l = 0; l < L.q[i]; ++l) {
        const Mat& a_l = ctx.a_mat[i][l];
        for (const auto& hs : cfg.sys.state_constraints.halfspaces()) {
          p.G.row(row).segment(L.u_offset(i, j, l), n_u) =
              (cfg.sys.b.transpose() * hs.a).transpose();
          if (i == 0) {
            p.g(row) = hs.b - hs.a.dot(ax);
          } else {
            p.G.row(row).segment(L.z_offset(i), n_x) =
                (a_l.transpose() * hs.a).transpose();
            p.G(row, L.alpha_offset(i)) = hs.a.dot(a_l * verts[j]);
            p.g(row) = hs.b;
          }
          ++row;
        }
      }
    }
  }

  // (c) input constraints.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < L.t[i]; ++j) {
      for (int l = 0; l < L.q[i]; ++l) {
        for (const auto& hs : cfg.sys.input_constraints.halfspaces()) {
          p.G.row(row).segment(L.u_offset(i, j, l), n_u) = hs.a.transpose();
          p.g(row) = hs.b;
          ++row;
        }
      }
    }
  }

  // (d) state-cost epigraph: cx_i bounds ||Q (z_i + alpha_i s_j)|| over j.
  for (int i = 0; i < n; ++i) {
    const auto& verts = seq.sets[ctx.sigma[i]].vertices();
    for (int j = 0; j < L.t[i]; ++j) {
      for (int rr = 0; rr < n_x; ++rr) {
        for (double sign : {1.0, -1.0}) {
          p.G.row(row).segment(L.z_offset(i), n_x) = sign * cfg.q.row(rr);
          if (i > 0) p.G(row, L.alpha_offset(i)) = sign * cfg.q.row(rr).dot(verts[j]);
          p.G(row, L.cx_offset(i)) = -1.0;
          ++row;
        }
      }
    }
  }

  // (e) input-cost epigraph: cu_i bounds ||R u|| over (j, l).
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < L.t[i]; ++j) {
      for (int l = 0; l < L.q[i]; ++l) {
        for (int rr = 0; rr < n_u; ++rr) {
          for (double sign : {1.0, -1.0}) {
            p.G.row(row).segment(L.u_offset(i, j, l), n_u) = sign * cfg.r.row(rr);
            p.G(row, L.cu_offset(i)) = -1.0;
            ++row;
          }
        }
      }
    }
  }

  // (f) nonnegative scalings.
  for (int i = 0; i <= n; ++i) {
    p.G(row, L.alpha_offset(i)) = -1.0;
    ++row;
  }

  // (g) terminal gauge rows and the inclusion budget gamma <= 1.
  for (const Vec& v : s_term.vertices()) {
    for (const auto& hs : s_term.halfspaces()) {
      p.G.row(row).segment(L.z_offset(n), n_x) = hs.a.transpose();
      p.G(row, L.alpha_offset(n)) = hs.a.dot(v);
      p.G(row, L.gamma_col) = -hs.b;
      ++row;
    }
  }
  p.G(row, L.gamma_col) = 1.0;
  p.g(row) = 1.0;
  ++row;

  // Initial section is the measured state exactly.
  for (int c = 0; c < n_x; ++c) {
    p.E(c, L.z_offset(0) + c) = 1.0;
    p.e(c) = x_now(c);
  }
  p.E(n_x, L.alpha_offset(0)) = 1.0;
  p.e(n_x) = 0.0;

  if (lay_out) *lay_out = L;
  return p;
}

TubeSolution extract_solution(const TubeLayout& L, const Vec& y,
                              double objective) {
  TubeSolution sol;
  const int n = L.horizon;
  sol.z.resize(n + 1);
  sol.alpha = Vec(n + 1);
  for (int i = 0; i <= n; ++i) {
    sol.z[i] = y.segment(L.z_offset(i), L.n_x);
    sol.alpha(i) = y(L.alpha_offset(i));
  }
  sol.controls.resize(n);
  for (int i = 0; i < n; ++i) {
    sol.controls[i].assign(L.t[i], std::vector<Vec>(L.q[i]));
    for (int j = 0; j < L.t[i]; ++j)
      for (int l = 0; l < L.q[i]; ++l)
        sol.controls[i][j][l] = y.segment(L.u_offset(i, j, l), L.n_u);
  }
  sol.cx = Vec(n);
  sol.cu = Vec(n);
  for (int i = 0; i < n; ++i) {
    sol.cx(i) = y(L.cx_offset(i));
    sol.cu(i) = y(L.cu_offset(i));
  }
  sol.gamma = y(L.gamma_col);
  sol.value = objective;
  return sol;
}

StepResult finish_step(const MpcConfig& cfg, int k, const Vec& x_now,
                       const Vec& theta_now, const TubeLayout& L,
                       const LpResult& res) {
  StepResult out;
  out.iterations = res.iterations;
  switch (res.status) {
    case LpStatus::Optimal:
      break;
    case LpStatus::Infeasible:
      out.status = StepStatus::Infeasible;
      return out;
    default:
      out.status = StepStatus::NumericalFailure;
      return out;
  }
  out.sol = extract_solution(L, res.y, res.objective);
  out.u = out.sol.controls[0][0][0];
  out.max_violation = tube_violation(cfg, k, x_now, theta_now, out.sol);
  out.status =
      out.max_violation <= kAuditTol ? StepStatus::Optimal : StepStatus::NumericalFailure;
  return out;
}

bool point_admissible(const MpcConfig& cfg, const Vec& x_now,
                      const Vec& theta_now) {
  return x_now.size() == cfg.sys.state_dim() &&
         theta_now.size() == cfg.sys.scheduling_dim() &&
         contains_point(cfg.sys.state_constraints, x_now, 1e-9) &&
         contains_point(cfg.sys.theta, theta_now, 1e-9);
}

}  // namespace

const char* to_string(StepStatus s) {
  switch (s) {
    case StepStatus::Optimal:
      return "Optimal";
    case StepStatus::Infeasible:
      return "Infeasible";
    case StepStatus::NumericalFailure:
      return "NumericalFailure";
  }
  return "?";
}

void MpcConfig::validate() const {
  sys.validate();
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  const int n_x = sys.state_dim();
  const int n_u = sys.input_dim();
  if (q.rows() != n_x || q.cols() != n_x)
    throw ConfigError("state weight must be n_x by n_x");
  if (r.rows() != n_u || r.cols() != n_u)
    throw ConfigError("input weight must be n_u by n_u");
  Eigen::FullPivLU<Mat> lu(q);
  if (lu.rank() < n_x) throw ConfigError("state weight must have full rank");
  if (ingredients.period() < 1)
    throw ConfigError("terminal ingredients carry no sequence");
  if (ingredients.seq.sets[0].dim() != n_x)
    throw ConfigError("terminal sequence dimension does not match the state");
  if ((q - ingredients.q).cwiseAbs().maxCoeff() > 1e-12 ||
      (r - ingredients.r).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError(
        "stage weights differ from the ones the terminal ingredients were "
        "built with");
  if (scheduling.mode == SchedulingMode::RateBounded && scheduling.rate < 0.0)
    throw ConfigError("scheduling rate bound must be nonnegative");
}

LpProblem build_tube_lp(const MpcConfig& config, int k, const Vec& x_now,
                        const Vec& theta_now, TubeLayout* layout) {
  return build_impl(config, k, x_now, theta_now, layout);
}

LpDimensions lp_dimensions(const MpcConfig& config, int k) {
  config.validate();
  LpDimensions d;
  TubeLayout L;
  const Vec x0 = Vec::Zero(config.sys.state_dim());
  const Vec th0 = config.sys.theta.vertices().front();
  const LpProblem p = build_impl(config, k, x0, th0, &L);
  d.built_vars = static_cast<int>(p.G.cols());
  d.built_ineq = static_cast<int>(p.G.rows());
  d.built_eq = static_cast<int>(p.E.rows());

  const auto& seq = config.ingredients.seq;
  const int n = config.horizon;
  const int n_x = config.sys.state_dim();
  const int n_u = config.sys.input_dim();
  const int q_full = config.sys.theta.num_vertices();
  const int r_x = config.sys.state_constraints.num_halfspaces();
  const int r_u = config.sys.input_constraints.num_halfspaces();
  const auto t_of = [&](int i) {
    return seq.sets[seq.shape_index(k + i)].num_vertices();
  };
  const auto r_of = [&](int i) {
    return seq.sets[seq.shape_index(k + i)].num_halfspaces();
  };
  // Quoted closed forms: control blocks summed over i = 0..N (one more step
  // than controllers exist for) and no step-0 vertex collapse.
  int vars = 1 + (n + 1) * (n_x + 3);
  int ineq = 1 + r_of(n) * t_of(n);
  for (int i = 0; i <= n; ++i) {
    const int qi = (i == 0) ? 1 : q_full;
    vars += n_u * qi * t_of(i);
    ineq += (r_x * qi + r_u * qi + r_of(i + 1) * qi + 2 * n_x + 2 * n_u * qi) *
            t_of(i);
  }
  d.formula_vars = vars;
  d.formula_ineq = ineq;
  d.formula_eq = n_x + 1;
  return d;
}

double tube_violation(const MpcConfig& config, int k, const Vec& x_now,
                      const Vec& theta_now, const TubeSolution& sol) {
  const auto& seq = config.ingredients.seq;
  const int n = config.horizon;
  const BuildContext ctx = make_context(config, k, theta_now);
  double worst = 0.0;
  const auto bump = [&](double v) { worst = std::max(worst, v); };

  bump((sol.z[0] - x_now).lpNorm<Eigen::Infinity>());
  bump(std::abs(sol.alpha(0)));
  for (int i = 0; i <= n; ++i) bump(-sol.alpha(i));

  for (int i = 0; i < n; ++i) {
    const auto& verts = seq.sets[ctx.sigma[i]].vertices();
    const auto& target = seq.sets[ctx.sigma[i + 1]].halfspaces();
    const int t_i = static_cast<int>(sol.controls[i].size());
    for (int j = 0; j < t_i; ++j) {
      const Vec base = (i == 0) ? x_now : Vec(sol.z[i] + sol.alpha(i) * verts[j]);
      for (int l = 0; l < static_cast<int>(sol.controls[i][j].size()); ++l) {
        const Vec& u = sol.controls[i][j][l];
        const Vec succ = ctx.a_mat[i][l] * base + config.sys.b * u;
        for (const auto& hs : target)
          bump(hs.a.dot(succ) -
               (hs.a.dot(sol.z[i + 1]) + sol.alpha(i + 1) * hs.b));
        for (const auto& hs : config.sys.state_constraints.halfspaces())
          bump(hs.a.dot(succ) - hs.b);
        for (const auto& hs : config.sys.input_constraints.halfspaces())
          bump(hs.a.dot(u) - hs.b);
      }
    }
  }

  const Polytope& s_term = seq.sets[ctx.sigma[n]];
  for (const Vec& v : s_term.vertices())
    for (const auto& hs : s_term.halfspaces())
      bump(hs.a.dot(sol.z[n]) + sol.alpha(n) * hs.a.dot(v) - sol.gamma * hs.b);
  bump(sol.gamma - 1.0);
  return worst;
}

StepResult solve_step(const MpcConfig& config, int k, const Vec& x_now,
                      const Vec& theta_now) {
  config.validate();
  if (!point_admissible(config, x_now, theta_now)) {
    StepResult out;
    out.status = StepStatus::Infeasible;
    return out;
  }
  TubeLayout L;
  const LpProblem p = build_impl(config, k, x_now, theta_now, &L);
  const LpResult res = solve_lp(p);
  return finish_step(config, k, x_now, theta_now, L, res);
}

TubeLpTemplate::TubeLpTemplate(const MpcConfig& config, int k)
    : cfg_(&config), k_(k) {
  config.validate();
  if (config.scheduling.mode != SchedulingMode::MeasuredThenFull)
    throw UnsupportedError(
        "template caching requires the measured-then-full scheduling model");
  const Vec x0 = Vec::Zero(config.sys.state_dim());
  const Vec th0 = config.sys.theta.vertices().front();
  base_ = build_impl(config, k, x0, th0, &layout_);
  compiled_ = std::make_unique<CompiledLp>(base_);

  const auto& seq = config.ingredients.seq;
  const auto& tube_rows = seq.sets[seq.shape_index(k + 1)].halfspaces();
  h1_ = Mat(tube_rows.size(), config.sys.state_dim());
  h1b_ = Vec(tube_rows.size());
  for (std::size_t f = 0; f < tube_rows.size(); ++f) {
    h1_.row(f) = tube_rows[f].a.transpose();
    h1b_(f) = tube_rows[f].b;
  }
  const auto& x_rows = config.sys.state_constraints.halfspaces();
  hx_ = Mat(x_rows.size(), config.sys.state_dim());
  hxb_ = Vec(x_rows.size());
  for (std::size_t f = 0; f < x_rows.size(); ++f) {
    hx_.row(f) = x_rows[f].a.transpose();
    hxb_(f) = x_rows[f].b;
  }
}

StepResult TubeLpTemplate::solve(const Vec& x_now, const Vec& theta_now,
                                 const std::vector<int>* warm,
                                 std::vector<int>* basis_out) const {
  if (!point_admissible(*cfg_, x_now, theta_now)) {
    StepResult out;
    out.status = StepStatus::Infeasible;
    return out;
  }
  Vec g = base_.g;
  Vec e = base_.e;
  const Vec ax = a_of_theta(cfg_->sys, theta_now) * x_now;
  g.segment(layout_.tube0_row, layout_.tube0_rows) = -(h1_ * ax);
  g.segment(layout_.state0_row, layout_.state0_rows) = hxb_ - hx_ * ax;
  e.head(cfg_->sys.state_dim()) = x_now;
  e(cfg_->sys.state_dim()) = 0.0;

  LpResult res = compiled_->solve(g, e, warm);
  if (res.status == LpStatus::NumericalFailure && warm)
    res = compiled_->solve(g, e, nullptr);  // retry cold before giving up
  StepResult out = finish_step(*cfg_, k_, x_now, theta_now, layout_, res);
  if (basis_out && res.status == LpStatus::Optimal) *basis_out = res.basis;
  return out;
}

TubeController::TubeController(MpcConfig config) : cfg_(std::move(config)) {
  cfg_.validate();
  const int m = cfg_.ingredients.period();
  templates_.resize(m);
  basis_.resize(m);
}

StepResult TubeController::step(int k, const Vec& x_now, const Vec& theta_now) {
  if (cfg_.scheduling.mode != SchedulingMode::MeasuredThenFull)
    return solve_step(cfg_, k, x_now, theta_now);
  const int res_idx = cfg_.ingredients.seq.shape_index(k);
  if (!templates_[res_idx])
    templates_[res_idx] = std::make_unique<TubeLpTemplate>(cfg_, res_idx);
  const std::vector<int>* warm =
      basis_[res_idx].empty() ? nullptr : &basis_[res_idx];
  std::vector<int> bout;
  StepResult out = templates_[res_idx]->solve(x_now, theta_now, warm, &bout);
  if (out.status == StepStatus::Optimal && !bout.empty())
    basis_[res_idx] = std::move(bout);
  return out;
}

void TubeController::reset() {
  for (auto& b : basis_) b.clear();
}

}  // namespace tmpc
