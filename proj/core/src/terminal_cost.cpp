#include "tmpc/terminal_cost.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "tmpc/errors.hpp"
#include "tmpc/linprog.hpp"

namespace tmpc {
namespace {

double inf_norm(const Vec& v) {
  return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0;
}

}  // namespace

ContractionRates contraction_rates(int m, double lambda) {
  if (m < 1) throw ConfigError("period must be at least 1");
  if (!(lambda >= 0.0 && lambda < 1.0))
    throw ConfigError("contraction factor must lie in [0,1)");
  ContractionRates out;
  out.rho_k.resize(m);
  const auto scale = [&](int s) { return m + (lambda - 1.0) * s; };
  for (int s = 0; s < m; ++s) {
    if (s <= m - 2)
      out.rho_k[s] = scale(s + 1) / scale(s);
    else
      out.rho_k[s] = lambda * m / (lambda * (m - 1) + 1.0);
  }
  out.rho = out.rho_k[0];
  return out;
}

std::vector<std::vector<std::vector<Vec>>> terminal_vertex_controls(
    const LpvSystem& sys, const ContractiveSequence& seq, const Mat& q,
    const Mat& r) {
  sys.validate();
  const int m = seq.period();
  if (m == 0) throw ConfigError("sequence has no shape sets");
  if (q.rows() != sys.state_dim() || q.cols() != sys.state_dim())
    throw DimensionError("state weight must be n_x by n_x");
  if (r.rows() != sys.input_dim() || r.cols() != sys.input_dim())
    throw DimensionError("input weight must be n_u by n_u");

  const auto& tverts = sys.theta.vertices();
  const int q_sched = static_cast<int>(tverts.size());
  const int n_u = sys.input_dim();
  std::vector<Mat> a_at(q_sched);
  for (int l = 0; l < q_sched; ++l) a_at[l] = a_of_theta(sys, tverts[l]);
  const auto& u_rows = sys.input_constraints.halfspaces();

  std::vector<std::vector<std::vector<Vec>>> controls(m);
  for (int i = 0; i < m; ++i) {
    const Polytope target =
        (i + 1 < m) ? seq.sets[i + 1] : scale(seq.sets[0], seq.lambda);
    const auto& target_rows = target.halfspaces();
    const auto& verts = seq.sets[i].vertices();
    controls[i].assign(verts.size(), std::vector<Vec>(q_sched));
    for (int j = 0; j < static_cast<int>(verts.size()); ++j) {
      for (int l = 0; l < q_sched; ++l) {
        // min t  s.t.  +-(R u) <= t,  image in target,  u admissible.
        const Vec image_const = a_at[l] * verts[j];
        const int n = n_u + 1;
        const int n_rows = 2 * n_u + static_cast<int>(target_rows.size()) +
                           static_cast<int>(u_rows.size()) + 1;
        LpProblem p;
        p.c = Vec::Zero(n);
        p.c(n_u) = 1.0;
        p.G = Mat::Zero(n_rows, n);
        p.g = Vec::Zero(n_rows);
        int row = 0;
        for (int s = 0; s < n_u; ++s) {
          p.G.row(row).head(n_u) = r.row(s);
          p.G(row, n_u) = -1.0;
          ++row;
          p.G.row(row).head(n_u) = -r.row(s);
          p.G(row, n_u) = -1.0;
          ++row;
        }
        for (const auto& hs : target_rows) {
          p.G.row(row).head(n_u) = (sys.b.transpose() * hs.a).transpose();
          /* Vertices of a maximal set land exactly on the shrunken target's
           * boundary, so a hard inclusion is infeasible at roundoff level.
           * Half the audit tolerance keeps the controls strictly inside what
           * verification accepts. */
          p.g(row) = hs.b - hs.a.dot(image_const) +
                     0.5 * kCertTol * (1.0 + std::abs(hs.b));
          ++row;
        }
        for (const auto& hs : u_rows) {
          p.G.row(row).head(n_u) = hs.a.transpose();
          p.g(row) = hs.b;
          ++row;
        }
        p.G(row, n_u) = -1.0;  // t >= 0
        const LpResult res = solve_lp(p);
        if (res.status != LpStatus::Optimal)
          throw NumericalError(
              "terminal control program failed at (set " + std::to_string(i) +
              ", vertex " + std::to_string(j) + ", scheduling vertex " +
              std::to_string(l) + "): " + to_string(res.status));
        controls[i][j][l] = res.y.head(n_u);
      }
    }
  }
  return controls;
}

StageBounds stage_upper_bounds(
    const ContractiveSequence& seq,
    const std::vector<std::vector<std::vector<Vec>>>& controls, const Mat& q,
    const Mat& r) {
  const int m = seq.period();
  if (m == 0) throw ConfigError("sequence has no shape sets");
  if (static_cast<int>(controls.size()) != m)
    throw DimensionError("controls do not cover every shape set");
  StageBounds out;
  out.ell_bar_i.resize(m);
  out.ell_epi_i.resize(m);
  for (int i = 0; i < m; ++i) {
    const auto& verts = seq.sets[i].vertices();
    if (controls[i].size() != verts.size())
      throw DimensionError("controls do not cover every vertex");
    double bar = 0.0, state_max = 0.0, input_max = 0.0;
    for (std::size_t j = 0; j < verts.size(); ++j) {
      const double sx = inf_norm(q * verts[j]);
      state_max = std::max(state_max, sx);
      for (const Vec& u : controls[i][j]) {
        const double su = inf_norm(r * u);
        input_max = std::max(input_max, su);
        bar = std::max(bar, sx + su);
      }
    }
    out.ell_bar_i[i] = bar;
    out.ell_epi_i[i] = state_max + input_max;
  }
  out.ell_bar = *std::max_element(out.ell_bar_i.begin(), out.ell_bar_i.end());
  out.ell_epi = *std::max_element(out.ell_epi_i.begin(), out.ell_epi_i.end());
  return out;
}

TerminalIngredients make_terminal_ingredients(const LpvSystem& sys,
                                              const ContractiveSequence& seq,
                                              const Mat& q, const Mat& r) {
  VerifyReport rep = verify_sequence(sys, seq);
  if (!rep.ok)
    throw ConfigError(
        "sequence failed verification; terminal ingredients need a valid "
        "contractive sequence");
  TerminalIngredients ing;
  ing.seq = seq;
  if (ing.seq.controls.empty()) ing.seq.controls = std::move(rep.controls);
  ing.q = q;
  ing.r = r;
  ing.terminal_controls = terminal_vertex_controls(sys, ing.seq, q, r);
  const StageBounds bounds =
      stage_upper_bounds(ing.seq, ing.terminal_controls, q, r);
  ing.ell_bar_i = bounds.ell_bar_i;
  ing.ell_bar = bounds.ell_bar;
  ing.ell_epi_i = bounds.ell_epi_i;
  ing.ell_epi = bounds.ell_epi;
  ContractionRates rates = contraction_rates(ing.seq.period(), ing.seq.lambda);
  ing.rho_k = std::move(rates.rho_k);
  ing.rho = rates.rho;
  return ing;
}

double lyapunov_scale(const TerminalIngredients& ing, int k) {
  const int m = ing.period();
  if (m == 0) throw ConfigError("ingredients carry no sequence");
  return m + (ing.seq.lambda - 1.0) * ing.seq.shape_index(k);
}

double lyapunov_w(const TerminalIngredients& ing, int k, const Polytope& x) {
  const int i = ing.seq.shape_index(k);
  return lyapunov_scale(ing, k) * set_gauge(ing.seq.sets[i], x);
}

double lyapunov_w_bar(const TerminalIngredients& ing, int k, const Polytope& x) {
  return ing.ell_bar / (1.0 - ing.rho) * lyapunov_w(ing, k, x);
}

double terminal_cost(const TerminalIngredients& ing, int time_index,
                     const Vec& z, double alpha) {
  if (alpha < 0.0)
    throw NegativeScalingError("cross-section scaling must be nonnegative");
  const int i = ing.seq.shape_index(time_index);
  const Polytope& s = ing.seq.sets[i];
  double psi = 0.0;
  for (const GaugeRow& row : homothetic_gauge_rows(s, s))
    psi = std::max(psi, row.a_z.dot(z) + row.a_alpha * alpha);
  return ing.ell_bar / (1.0 - ing.rho) * lyapunov_scale(ing, time_index) * psi;
}

double terminal_cost_coefficient(const TerminalIngredients& ing,
                                 int time_index) {
  return ing.ell_epi / (1.0 - ing.rho) * lyapunov_scale(ing, time_index);
}

std::vector<GaugeRow> homothetic_gauge_rows(const Polytope& s, const Polytope& t) {
  if (!s.is_pc_set()) throw PcSetError("gauge needs a proper C-set");
  if (t.dim() != s.dim()) throw DimensionError("shape dimensions differ");
  std::vector<GaugeRow> rows;
  rows.reserve(s.halfspaces().size() * t.vertices().size());
  for (const auto& hs : s.halfspaces()) {
    for (const Vec& v : t.vertices()) {
      GaugeRow row;
      row.a_z = hs.a / hs.b;
      row.a_alpha = hs.a.dot(v) / hs.b;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace tmpc
