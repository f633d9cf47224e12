#include "tmpc/contractive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <utility>

#include "tmpc/errors.hpp"
#include "tmpc/linprog.hpp"

namespace tmpc {
namespace {

double cross2(const Vec& a, const Vec& b) { return a(0) * b(1) - a(1) * b(0); }

struct CertOutcome {
  LpStatus status = LpStatus::NumericalFailure;
  double depth = 0.0;  // achieved gauge of the image w.r.t. the target
  Vec u;
};

// Deepest admissible placement of an image point into a target set:
//   min depth  s.t.  a'(image_const + B u) <= depth * b   (target rows)
//                    u in input_set
//                    a'(image_const + B u) <= b            (extra rows, optional)
//                    depth >= 0
// image_const carries the control-independent part A(theta_l) * vertex.
// Target rows with b = 0 (pinched targets) turn into hard equalities on the
// image, with depth reporting 0.
CertOutcome solve_vertex_cert(const std::vector<Halfspace>& target_rows,
                              const Polytope& input_set, const Mat& b_mat,
                              const Vec& image_const,
                              const std::vector<Halfspace>* extra_image_rows) {
  const int n_u = static_cast<int>(b_mat.cols());
  const int n = n_u + 1;  // controls then the depth scalar
  const auto& u_rows = input_set.halfspaces();
  const int n_extra =
      extra_image_rows ? static_cast<int>(extra_image_rows->size()) : 0;
  const int n_rows =
      static_cast<int>(target_rows.size() + u_rows.size()) + n_extra + 1;

  LpProblem p;
  p.c = Vec::Zero(n);
  p.c(n_u) = 1.0;
  p.G = Mat::Zero(n_rows, n);
  p.g = Vec::Zero(n_rows);
  int r = 0;
  for (const auto& hs : target_rows) {
    p.G.row(r).head(n_u) = (b_mat.transpose() * hs.a).transpose();
    p.G(r, n_u) = -hs.b;
    p.g(r) = -hs.a.dot(image_const);
    ++r;
  }
  for (const auto& hs : u_rows) {
    p.G.row(r).head(n_u) = hs.a.transpose();
    p.g(r) = hs.b;
    ++r;
  }
  if (extra_image_rows) {
    for (const auto& hs : *extra_image_rows) {
      p.G.row(r).head(n_u) = (b_mat.transpose() * hs.a).transpose();
      p.g(r) = hs.b - hs.a.dot(image_const);
      ++r;
    }
  }
  p.G(r, n_u) = -1.0;  // depth >= 0
  p.g(r) = 0.0;

  const LpResult res = solve_lp(p);
  CertOutcome out;
  out.status = res.status;
  if (res.status == LpStatus::Optimal) {
    out.depth = res.y(n_u);
    out.u = res.y.head(n_u);
  }
  return out;
}

// Worst violation of the rows at a point, relative to the row offsets (the
// same normalization the certificate slack uses, so producers and auditors
// of certificates agree on what "inside" means).
double row_excess(const std::vector<Halfspace>& rows, const Vec& x) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& hs : rows)
    worst = std::max(worst,
                     (hs.a.dot(x) - hs.b) / (1.0 + std::abs(hs.b)));
  return worst;
}

// Pair every vertex with its negation; fails when some vertex lacks one.
bool negation_closed(const std::vector<Vec>& verts, std::vector<int>* partner) {
  const int n = static_cast<int>(verts.size());
  std::vector<int> pair_of(n, -1);
  for (int i = 0; i < n; ++i) {
    if (pair_of[i] >= 0) continue;
    const double tol = 1e-7 * (1.0 + verts[i].lpNorm<Eigen::Infinity>());
    int match = -1;
    for (int j = 0; j < n; ++j) {
      if (j == i || pair_of[j] >= 0) continue;
      if ((verts[j] + verts[i]).lpNorm<Eigen::Infinity>() <= tol) {
        match = j;
        break;
      }
    }
    if (match < 0) return false;
    pair_of[i] = match;
    pair_of[match] = i;
  }
  if (partner) *partner = pair_of;
  return true;
}

// Conic multipliers of x over the ordered vertex pair (va, vb):
// [va vb] z = x with z >= 0 (up to accept_tol of dust, clamped away).
bool cone_multipliers(const Vec& va, const Vec& vb, const Vec& x,
                      double accept_tol, Vec* z) {
  const double det = cross2(va, vb);
  if (std::abs(det) < 1e-14 * (1.0 + va.lpNorm<Eigen::Infinity>()) *
                          (1.0 + vb.lpNorm<Eigen::Infinity>()))
    return false;
  double z0 = cross2(x, vb) / det;
  double z1 = cross2(va, x) / det;
  const double eps = accept_tol * (1.0 + std::abs(z0) + std::abs(z1));
  if (z0 < -eps || z1 < -eps) return false;
  *z = Vec(2);
  (*z)(0) = std::max(z0, 0.0);
  (*z)(1) = std::max(z1, 0.0);
  return true;
}

// One half-plane pass of polygon clipping (h >= -tol is "inside"); accepts
// degenerate inputs and may return degenerate outputs -- callers only need
// the points, not a full-dimensional polygon.
std::vector<Vec> clip_halfplane(const std::vector<Vec>& poly,
                                const std::function<double(const Vec&)>& h,
                                double tol) {
  const int n = static_cast<int>(poly.size());
  if (n == 0) return {};
  if (n == 1) return h(poly[0]) >= -tol ? poly : std::vector<Vec>{};
  std::vector<Vec> out;
  for (int i = 0; i < n; ++i) {
    const Vec& s = poly[i];
    const Vec& e = poly[(i + 1) % n];
    const double hs = h(s);
    const double he = h(e);
    const auto crossing = [&]() {
      const double t = hs / (hs - he);
      return Vec(s + t * (e - s));
    };
    if (he >= -tol) {
      if (hs < -tol) out.push_back(crossing());
      out.push_back(e);
    } else if (hs >= -tol) {
      out.push_back(crossing());
    }
  }
  return out;
}

// Most interior admissible input: the Chebyshev center of
//   { u : a'(image_const + B u) <= b  (image rows),  u in input_set }.
// Used by the built-in synthesis policy.  A cost-minimizing choice would sit
// on a face of that region -- in the worst case every vertex image lands on
// one gauge ridge and the propagated set collapses -- while the center keeps
// each image maximally clear of its corridor walls, so roundoff-sized
// membership leakage never compounds across steps.
CertOutcome solve_center_input(const std::vector<Halfspace>& image_rows,
                               const Polytope& input_set, const Mat& b_mat,
                               const Vec& image_const) {
  const int n_u = static_cast<int>(b_mat.cols());
  const int n = n_u + 1;  // input, then the interiority radius
  const auto& u_rows = input_set.halfspaces();
  const int n_rows = static_cast<int>(image_rows.size() + u_rows.size()) + 1;

  LpProblem p;
  p.c = Vec::Zero(n);
  p.c(n_u) = -1.0;  // maximize the radius
  p.G = Mat::Zero(n_rows, n);
  p.g = Vec::Zero(n_rows);
  int r = 0;
  for (const auto& hs : image_rows) {
    const Vec alpha = b_mat.transpose() * hs.a;
    p.G.row(r).head(n_u) = alpha.transpose();
    p.G(r, n_u) = alpha.norm();
    p.g(r) = hs.b - hs.a.dot(image_const);
    ++r;
  }
  for (const auto& hs : u_rows) {
    p.G.row(r).head(n_u) = hs.a.transpose();
    p.G(r, n_u) = hs.a.norm();
    p.g(r) = hs.b;
    ++r;
  }
  p.G(r, n_u) = -1.0;  // radius >= 0

  const LpResult res = solve_lp(p);
  CertOutcome out;
  out.status = res.status;
  if (res.status == LpStatus::Optimal) {
    out.depth = res.y(n_u);
    out.u = res.y.head(n_u);
  }
  return out;
}

// Rows of the one-step backward set under measured scheduling.  The input
// may depend on the measured parameter, so the pre-set is the intersection
// over scheduling vertices of the individually projected (state, input)
// systems -- projecting one stacked system would force a common input and
// compute a smaller set.  Target offsets are scaled by target_scale.
std::vector<Halfspace> backward_rows(const LpvSystem& sys,
                                     const std::vector<Mat>& a_at,
                                     const std::vector<Halfspace>& target,
                                     double target_scale) {
  const int n_x = sys.state_dim();
  const int n_u = sys.input_dim();
  std::vector<Halfspace> all;
  for (const auto& a : a_at) {
    std::vector<Halfspace> xu;
    for (const auto& hs : target) {
      Halfspace row;
      row.a = Vec::Zero(n_x + n_u);
      row.a.head(n_x) = a.transpose() * hs.a;
      row.a.tail(n_u) = sys.b.transpose() * hs.a;
      row.b = target_scale * hs.b;
      xu.push_back(std::move(row));
    }
    for (const auto& hs : sys.input_constraints.halfspaces()) {
      Halfspace row;
      row.a = Vec::Zero(n_x + n_u);
      row.a.tail(n_u) = hs.a;
      row.b = hs.b;
      xu.push_back(std::move(row));
    }
    std::vector<Halfspace> proj = fm_project_rows(std::move(xu), n_x);
    all.insert(all.end(), proj.begin(), proj.end());
  }
  return all;
}

}  // namespace

int ContractiveSequence::shape_index(int k) const {
  if (sets.empty()) throw ConfigError("sequence has no shape sets");
  if (k < 0) throw ConfigError("time index must be nonnegative");
  return k % static_cast<int>(sets.size());
}

const char* to_string(SynthesisStatus s) {
  switch (s) {
    case SynthesisStatus::Success:
      return "Success";
    case SynthesisStatus::NoContraction:
      return "NoContraction";
    case SynthesisStatus::StateConstraintViolated:
      return "StateConstraintViolated";
    case SynthesisStatus::DegeneratePropagation:
      return "DegeneratePropagation";
  }
  return "?";
}

VerifyReport verify_sequence(const LpvSystem& sys, const ContractiveSequence& seq) {
  sys.validate();
  VerifyReport rep;
  const int m = seq.period();
  if (m == 0) {
    rep.violations.push_back({-1, -1, -1, 0.0, "sequence has no shape sets"});
    return rep;
  }
  if (!(seq.lambda >= 0.0 && seq.lambda < 1.0)) {
    rep.violations.push_back(
        {-1, -1, -1, 0.0, "contraction factor must lie in [0,1)"});
    return rep;
  }
  for (int i = 0; i < m; ++i) {
    if (seq.sets[i].dim() != sys.state_dim())
      throw DimensionError("shape set dimension does not match the state");
    if (!seq.sets[i].is_pc_set())
      rep.violations.push_back(
          {i, -1, -1, 0.0, "shape set is not a proper C-set"});
  }
  if (!rep.violations.empty()) return rep;

  const bool audit = !seq.controls.empty();
  const auto& tverts = sys.theta.vertices();
  const int q = static_cast<int>(tverts.size());
  if (audit) {
    if (static_cast<int>(seq.controls.size()) != m)
      throw DimensionError("control certificates do not cover every shape set");
    for (int i = 0; i < m; ++i) {
      if (static_cast<int>(seq.controls[i].size()) != seq.sets[i].num_vertices())
        throw DimensionError("control certificates do not cover every vertex");
      for (const auto& per_theta : seq.controls[i]) {
        if (static_cast<int>(per_theta.size()) != q)
          throw DimensionError(
              "control certificates do not cover every scheduling vertex");
        for (const auto& u : per_theta)
          if (u.size() != sys.input_dim())
            throw DimensionError("control certificate has wrong input dimension");
      }
    }
  }

  std::vector<Mat> a_at(q);
  for (int l = 0; l < q; ++l) a_at[l] = a_of_theta(sys, tverts[l]);

  rep.controls.resize(m);
  for (int i = 0; i < m; ++i) {
    const Polytope& s = seq.sets[i];
    const Polytope target =
        (i + 1 < m) ? seq.sets[i + 1] : scale(seq.sets[0], seq.lambda);
    const auto& target_rows = target.halfspaces();
    const auto& verts = s.vertices();
    rep.controls[i].assign(verts.size(), std::vector<Vec>(q));
    for (int j = 0; j < static_cast<int>(verts.size()); ++j) {
      const Vec& v = verts[j];
      if (!contains_point(sys.state_constraints, v, kCertTol)) {
        rep.violations.push_back({i, j, -1,
                                  gauge(sys.state_constraints, v) - 1.0,
                                  "vertex escapes the state constraints"});
      }
      for (int l = 0; l < q; ++l) {
        const Vec image_const = a_at[l] * v;
        if (audit) {
          const Vec& u = seq.controls[i][j][l];
          const double in_u = gauge(sys.input_constraints, u) - 1.0;
          if (in_u > kCertTol) {
            rep.violations.push_back(
                {i, j, l, in_u, "certificate input escapes the input constraints"});
            continue;
          }
          const Vec image = image_const + sys.b * u;
          const double miss = row_excess(target_rows, image);
          if (miss > kCertTol) {
            rep.violations.push_back(
                {i, j, l, miss, "certificate image misses the target set"});
            continue;
          }
          rep.controls[i][j][l] = u;
        } else {
          const CertOutcome cert = solve_vertex_cert(
              target_rows, sys.input_constraints, sys.b, image_const, nullptr);
          if (cert.status == LpStatus::Infeasible) {
            rep.violations.push_back(
                {i, j, l, std::numeric_limits<double>::infinity(),
                 "no admissible input reaches the target set"});
            continue;
          }
          if (cert.status != LpStatus::Optimal)
            throw NumericalError("vertex certificate program failed numerically");
          if (cert.depth > 1.0 + kCertTol) {
            rep.violations.push_back(
                {i, j, l, cert.depth - 1.0,
                 "best admissible image still misses the target set"});
            continue;
          }
          rep.controls[i][j][l] = cert.u;
        }
      }
    }
  }
  rep.ok = rep.violations.empty();
  if (!rep.ok) rep.controls.clear();
  return rep;
}

Polytope maximal_contractive_set(const LpvSystem& sys, double lambda,
                                 int max_iter) {
  sys.validate();
  if (!(lambda >= 0.0 && lambda < 1.0))
    throw ConfigError("contraction factor must lie in [0,1)");
  if (max_iter < 1) throw ConfigError("iteration budget must be positive");

  const auto& tverts = sys.theta.vertices();
  std::vector<Mat> a_at(tverts.size());
  for (std::size_t l = 0; l < tverts.size(); ++l)
    a_at[l] = a_of_theta(sys, tverts[l]);

  Polytope omega = sys.state_constraints;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<Halfspace> all =
        backward_rows(sys, a_at, omega.halfspaces(), lambda);
    const auto& keep = omega.halfspaces();
    all.insert(all.end(), keep.begin(), keep.end());

    Polytope next;
    try {
      next = Polytope::from_halfspaces(all);
    } catch (const EmptySetError&) {
      throw DegenerateInputError(
          "no full-dimensional contractive set exists inside the state "
          "constraints at this contraction factor");
    } catch (const DegenerateInputError&) {
      throw DegenerateInputError(
          "no full-dimensional contractive set exists inside the state "
          "constraints at this contraction factor");
    }
    // next is contained in omega by construction; the fixed point is reached
    // once omega also fits in next.
    if (set_gauge(next, omega) <= 1.0 + kGeomEps) return next;
    omega = std::move(next);
  }
  throw ConvergenceError(
      "backward fixed-point iteration did not converge within the iteration "
      "budget");
}

ContractiveSequence maximal_set_sequence(const LpvSystem& sys, double lambda,
                                         int max_iter) {
  ContractiveSequence seq;
  seq.sets.push_back(maximal_contractive_set(sys, lambda, max_iter));
  seq.lambda = lambda;
  VerifyReport rep = verify_sequence(sys, seq);
  if (!rep.ok)
    throw NumericalError(
        "maximal contractive set failed its own vertex certificates");
  seq.controls = std::move(rep.controls);
  return seq;
}

SynthesisResult forward_propagation_synthesis(const LpvSystem& sys,
                                              const Polytope& s0, double lambda,
                                              int m_max,
                                              const VertexControlFn& control) {
  sys.validate();
  if (s0.dim() != sys.state_dim())
    throw DimensionError("seed shape dimension does not match the state");
  if (!s0.is_pc_set()) throw PcSetError("seed shape must be a proper C-set");
  if (!(lambda >= 0.0 && lambda < 1.0))
    throw ConfigError("contraction factor must lie in [0,1)");
  if (m_max < 1) throw ConfigError("step budget must be positive");

  SynthesisResult out;
  if (!contains_set(sys.state_constraints, s0, kCertTol)) {
    out.status = SynthesisStatus::StateConstraintViolated;
    out.fail_step = 0;
    return out;
  }

  const auto& tverts = sys.theta.vertices();
  const int q = static_cast<int>(tverts.size());
  std::vector<Mat> a_at(q);
  for (int l = 0; l < q; ++l) a_at[l] = a_of_theta(sys, tverts[l]);

  // Mirroring keeps propagated sets sign-symmetric (and halves the work),
  // valid whenever the seed, state and input sets are negation-closed.
  const bool mirror_env =
      !control && negation_closed(sys.state_constraints.vertices(), nullptr) &&
      negation_closed(sys.input_constraints.vertices(), nullptr);

  // Built-in policy: steer into the backward corridors of lambda*S_0.  Step
  // i of M must leave M-i-1 steps of reachability in hand, which one-step
  // greed cannot guarantee: its deepest placements all sit on a single gauge
  // ridge and the propagation stalls (or collapses) there.  corridor[j] is
  // the set from which lambda*S_0 is reachable in j steps; the final step
  // then lands inside lambda*S_0 by construction.
  std::vector<Polytope> corridors;
  int corridor_period = 0;
  if (!control) {
    corridors.push_back(scale(s0, lambda));
    bool fits = false;
    for (int m = 1; m <= m_max; ++m) {
      std::vector<Halfspace> rows =
          backward_rows(sys, a_at, corridors.back().halfspaces(), 1.0);
      const auto& keep = sys.state_constraints.halfspaces();
      rows.insert(rows.end(), keep.begin(), keep.end());
      Polytope pre;
      try {
        pre = Polytope::from_halfspaces(std::move(rows));
      } catch (const EmptySetError&) {
        out.status = SynthesisStatus::NoContraction;
        out.fail_step = m;
        return out;
      } catch (const DegenerateInputError&) {
        out.status = SynthesisStatus::NoContraction;
        out.fail_step = m;
        return out;
      }
      corridors.push_back(std::move(pre));
      if (set_gauge(corridors.back(), s0) <= 1.0 + kGeomEps) {
        corridor_period = m;
        fits = true;
        break;
      }
    }
    if (!fits) {
      out.status = SynthesisStatus::NoContraction;
      out.fail_step = m_max;
      return out;
    }
  }

  std::vector<Polytope> sets{s0};
  std::vector<std::vector<std::vector<Vec>>> controls;

  for (int i = 0; i < m_max; ++i) {
    const Polytope& cur = sets.back();
    const auto& verts = cur.vertices();
    const int t = static_cast<int>(verts.size());

    // Corridor for this step's images, certificate slack folded in (the
    // current vertices may touch their corridor's boundary to roundoff).
    std::vector<Halfspace> target_rows;
    if (!control) {
      const int remaining = std::max(corridor_period - i - 1, 0);
      target_rows = corridors[remaining].halfspaces();
      // Half the audit tolerance: produced certificates must land strictly
      // inside what verification accepts.
      for (auto& hs : target_rows)
        hs.b += 0.5 * kCertTol * (1.0 + std::abs(hs.b));
    }

    std::vector<std::vector<Vec>> ui(t, std::vector<Vec>(q));
    std::vector<int> partner;
    const bool mirror = mirror_env && negation_closed(verts, &partner);
    std::vector<char> have(t, 0);
    for (int j = 0; j < t; ++j) {
      if (have[j]) continue;
      for (int l = 0; l < q; ++l) {
        Vec u;
        if (control) {
          u = control(i, verts[j], l);
          if (u.size() != sys.input_dim())
            throw DimensionError("vertex control policy returned wrong size");
        } else {
          const CertOutcome cert = solve_center_input(
              target_rows, sys.input_constraints, sys.b, a_at[l] * verts[j]);
          if (cert.status == LpStatus::Infeasible)
            // Membership in the corridor guarantees a feasible step, so an
            // infeasible program means the slack was consumed by numerics.
            throw NumericalError(
                "corridor steering program infeasible at step " +
                std::to_string(i));
          if (cert.status != LpStatus::Optimal)
            throw NumericalError("vertex steering program failed numerically");
          u = cert.u;
        }
        ui[j][l] = u;
      }
      have[j] = 1;
      if (mirror && !have[partner[j]]) {
        for (int l = 0; l < q; ++l) ui[partner[j]][l] = -ui[j][l];
        have[partner[j]] = 1;
      }
    }
    std::vector<Vec> pts;
    pts.reserve(static_cast<std::size_t>(t) * q);
    for (int j = 0; j < t; ++j)
      for (int l = 0; l < q; ++l)
        pts.push_back(a_at[l] * verts[j] + sys.b * ui[j][l]);
    controls.push_back(std::move(ui));

    if (set_gauge(s0, pts) <= lambda + kCertTol) {
      out.status = SynthesisStatus::Success;
      out.period = i + 1;
      out.sequence.sets = std::move(sets);
      out.sequence.lambda = lambda;
      out.sequence.controls = std::move(controls);
      for (const auto& s : out.sequence.sets)
        out.vertex_counts.push_back(s.num_vertices());
      try {
        (void)Polytope::from_vertices(pts);
      } catch (const DegenerateInputError&) {
        out.degenerate_final = true;
      }
      return out;
    }
    if (i + 1 == m_max) {
      out.status = SynthesisStatus::NoContraction;
      out.fail_step = m_max;
      return out;
    }
    Polytope next;
    try {
      next = Polytope::from_vertices(pts);
    } catch (const DegenerateInputError&) {
      out.status = SynthesisStatus::DegeneratePropagation;
      out.fail_step = i + 1;
      return out;
    }
    if (!next.is_pc_set()) {
      out.status = SynthesisStatus::DegeneratePropagation;
      out.fail_step = i + 1;
      return out;
    }
    if (!contains_set(sys.state_constraints, next, kCertTol)) {
      out.status = SynthesisStatus::StateConstraintViolated;
      out.fail_step = i + 1;
      return out;
    }
    sets.push_back(std::move(next));
  }
  out.status = SynthesisStatus::NoContraction;
  out.fail_step = m_max;
  return out;
}

SmallestMResult smallest_m_search(const LpvSystem& sys, const Polytope& s0,
                                  double lambda, int m_max) {
  sys.validate();
  if (s0.dim() != sys.state_dim())
    throw DimensionError("seed shape dimension does not match the state");
  if (!s0.is_pc_set()) throw PcSetError("seed shape must be a proper C-set");
  if (!(lambda >= 0.0 && lambda < 1.0))
    throw ConfigError("contraction factor must lie in [0,1)");
  if (m_max < 1) throw ConfigError("period budget must be positive");

  SmallestMResult out;
  if (!contains_set(sys.state_constraints, s0, kCertTol)) {
    out.status = SynthesisStatus::StateConstraintViolated;
    return out;
  }

  const int n_u = sys.input_dim();
  const auto& tverts = sys.theta.vertices();
  const int q = static_cast<int>(tverts.size());
  std::vector<Mat> a_at(q);
  for (int l = 0; l < q; ++l) a_at[l] = a_of_theta(sys, tverts[l]);

  const auto& x_rows = sys.state_constraints.halfspaces();
  const auto& u_rows = sys.input_constraints.halfspaces();
  const auto& s0_rows = s0.halfspaces();

  // Node state as affine function of the stacked control variables.
  struct Node {
    Vec c;
    std::vector<std::pair<int, Mat>> terms;  // (control block, coefficient)
  };

  for (int m = 1; m <= m_max; ++m) {
    std::vector<std::vector<Node>> levels(m + 1);
    for (const Vec& v : s0.vertices()) levels[0].push_back({v, {}});
    int blocks = 0;
    for (int d = 0; d < m; ++d) {
      for (const Node& parent : levels[d]) {
        for (int l = 0; l < q; ++l) {
          Node child;
          child.c = a_at[l] * parent.c;
          child.terms.reserve(parent.terms.size() + 1);
          for (const auto& [id, coef] : parent.terms)
            child.terms.emplace_back(id, a_at[l] * coef);
          child.terms.emplace_back(blocks, sys.b);
          ++blocks;
          levels[d + 1].push_back(std::move(child));
        }
      }
    }
    const int n_vars = blocks * n_u + 1;
    const int gamma_idx = blocks * n_u;

    int n_rows = blocks * static_cast<int>(u_rows.size()) + 1;
    for (int d = 1; d < m; ++d)
      n_rows += static_cast<int>(levels[d].size() * x_rows.size());
    n_rows += static_cast<int>(levels[m].size() * s0_rows.size());

    LpProblem p;
    p.c = Vec::Zero(n_vars);
    p.c(gamma_idx) = 1.0;
    p.G = Mat::Zero(n_rows, n_vars);
    p.g = Vec::Zero(n_rows);
    int r = 0;
    for (int blk = 0; blk < blocks; ++blk) {
      for (const auto& hs : u_rows) {
        p.G.row(r).segment(blk * n_u, n_u) = hs.a.transpose();
        p.g(r) = hs.b;
        ++r;
      }
    }
    // Interior rows keep levels inside the state constraints; leaf rows pin
    // depth-m states inside gamma * lambda * seed.
    const auto emit_state_rows = [&](const Node& node,
                                     const std::vector<Halfspace>& rows,
                                     bool leaf) {
      for (const auto& hs : rows) {
        for (const auto& [id, coef] : node.terms)
          p.G.row(r).segment(id * n_u, n_u) += (coef.transpose() * hs.a).transpose();
        if (leaf) p.G(r, gamma_idx) = -lambda * hs.b;
        p.g(r) = (leaf ? 0.0 : hs.b) - hs.a.dot(node.c);
        ++r;
      }
    };
    for (int d = 1; d < m; ++d)
      for (const Node& node : levels[d]) emit_state_rows(node, x_rows, false);
    for (const Node& node : levels[m]) emit_state_rows(node, s0_rows, true);
    p.G(r, gamma_idx) = -1.0;  // gamma >= 0
    p.g(r) = 0.0;
    ++r;

    const LpResult res = solve_lp(p);
    if (res.status == LpStatus::Infeasible) continue;
    if (res.status != LpStatus::Optimal)
      throw NumericalError("successor-tree program failed numerically");
    if (res.y(gamma_idx) > 1.0 + kGeomEps) continue;

    // Evaluate the realized tree states.
    std::vector<std::vector<Vec>> states(m + 1);
    for (int d = 0; d <= m; ++d) {
      states[d].reserve(levels[d].size());
      for (const Node& node : levels[d]) {
        Vec x = node.c;
        for (const auto& [id, coef] : node.terms)
          x += coef * res.y.segment(id * n_u, n_u);
        states[d].push_back(std::move(x));
      }
    }

    ContractiveSequence cand;
    cand.lambda = lambda;
    cand.sets.push_back(s0);
    bool shapes_ok = true;
    for (int d = 1; d < m; ++d) {
      try {
        Polytope s = Polytope::from_vertices(states[d]);
        if (!s.is_pc_set()) {
          shapes_ok = false;
          break;
        }
        cand.sets.push_back(std::move(s));
      } catch (const DegenerateInputError&) {
        shapes_ok = false;
        break;
      }
    }
    if (!shapes_ok) continue;

    // Re-derive certificates for the final vertex lists (the hulls may have
    // discarded interior tree states) and double-check the candidate.
    VerifyReport rep = verify_sequence(sys, cand);
    if (!rep.ok) continue;
    cand.controls = std::move(rep.controls);
    out.status = SynthesisStatus::Success;
    out.sequence = std::move(cand);
    out.period = m;
    out.tree_levels = std::move(states);
    return out;
  }
  out.status = SynthesisStatus::NoContraction;
  return out;
}

Vec sequence_control(const ContractiveSequence& seq, int step_index,
                     const Vec& x, int theta_vertex) {
  const int m = seq.period();
  if (m == 0) throw ConfigError("sequence has no shape sets");
  if (static_cast<int>(seq.controls.size()) != m)
    throw ConfigError("sequence carries no vertex control certificates");
  const int i = seq.shape_index(step_index);
  const Polytope& s = seq.sets[i];
  const auto& verts = s.vertices();
  if (x.size() != s.dim())
    throw DimensionError("query point dimension does not match the shape");
  if (verts.empty() || seq.controls[i].empty())
    throw ConfigError("sequence carries no vertex control certificates");
  const int q = static_cast<int>(seq.controls[i][0].size());
  if (theta_vertex < 0 || theta_vertex >= q)
    throw DimensionError("scheduling vertex index out of range");
  const int n_u = static_cast<int>(seq.controls[i][0][theta_vertex].size());

  const int n = s.dim();
  if (n > 2)
    throw UnsupportedError(
        "interpolated control implemented for 1- and 2-dimensional shapes");
  if (x.lpNorm<Eigen::Infinity>() == 0.0) return Vec::Zero(n_u);

  if (n == 1) {
    for (int j = 0; j < static_cast<int>(verts.size()); ++j) {
      const double v = verts[j](0);
      if (v != 0.0 && x(0) / v >= 0.0)
        return (x(0) / v) * seq.controls[i][j][theta_vertex];
    }
    throw NumericalError("point not covered by the shape fan");
  }

  const int t = static_cast<int>(verts.size());
  for (int j = 0; j < t; ++j) {
    const Vec& va = verts[j];
    const Vec& vb = verts[(j + 1) % t];
    Vec z;
    if (!cone_multipliers(va, vb, x, 1e-9, &z)) continue;
    return z(0) * seq.controls[i][j][theta_vertex] +
           z(1) * seq.controls[i][(j + 1) % t][theta_vertex];
  }
  throw NumericalError("point not covered by the shape fan");
}

Vec sequence_control_at_theta(const LpvSystem& sys, const ContractiveSequence& seq,
                              int step_index, const Vec& x, const Vec& theta) {
  if (theta.size() != sys.scheduling_dim())
    throw DimensionError("scheduling parameter has wrong dimension");
  if (!contains_point(sys.theta, theta, kCertTol))
    throw ThetaRangeError("scheduling parameter escapes its set");
  const auto& tverts = sys.theta.vertices();
  const int q = static_cast<int>(tverts.size());
  const int d = sys.scheduling_dim();

  // Convex multipliers of theta over the scheduling vertices.
  LpProblem p;
  p.c = Vec::Zero(q);
  p.G = -Mat::Identity(q, q);
  p.g = Vec::Zero(q);
  p.E = Mat::Ones(d + 1, q);
  for (int l = 0; l < q; ++l) p.E.col(l).head(d) = tverts[l];
  p.e = Vec::Ones(d + 1);
  p.e.head(d) = theta;
  const LpResult res = solve_lp(p);
  if (res.status != LpStatus::Optimal)
    throw NumericalError("scheduling decomposition failed");

  Vec u;
  for (int l = 0; l < q; ++l) {
    const Vec ul = sequence_control(seq, step_index, x, l);
    if (l == 0)
      u = res.y(l) * ul;
    else
      u += res.y(l) * ul;
  }
  return u;
}

std::vector<Vec> propagate_points(const LpvSystem& sys,
                                  const ContractiveSequence& seq, int k,
                                  const Polytope& x) {
  const int m = seq.period();
  if (m == 0) throw ConfigError("sequence has no shape sets");
  if (static_cast<int>(seq.controls.size()) != m)
    throw ConfigError("sequence carries no vertex control certificates");
  const int i = seq.shape_index(k);
  const Polytope& s = seq.sets[i];
  if (x.dim() != s.dim())
    throw DimensionError("set dimension does not match the shape");
  if (!contains_set(s, x, kCertTol))
    throw ConfigError("set to propagate must lie inside the step's shape set");
  const int n = s.dim();
  if (n > 2)
    throw UnsupportedError(
        "image propagation implemented for 1- and 2-dimensional shapes");

  const auto& tverts = sys.theta.vertices();
  const int q = static_cast<int>(tverts.size());
  std::vector<Mat> a_at(q);
  for (int l = 0; l < q; ++l) a_at[l] = a_of_theta(sys, tverts[l]);
  const auto& ctrl = seq.controls[i];

  std::vector<Vec> pts;
  if (n == 1) {
    // Fan sectors are the two half-lines; the law is linear on each, so the
    // interval endpoints (plus the kink at zero) generate the exact image.
    std::vector<Vec> ws = x.vertices();
    double lo = ws.front()(0), hi = ws.front()(0);
    for (const Vec& w : ws) {
      lo = std::min(lo, w(0));
      hi = std::max(hi, w(0));
    }
    if (lo < 0.0 && hi > 0.0) ws.push_back(Vec::Zero(1));
    for (const Vec& w : ws)
      for (int l = 0; l < q; ++l)
        pts.push_back(a_at[l] * w + sys.b * sequence_control(seq, i, w, l));
    return pts;
  }

  // 2-D: clip the set against each fan sector; the law is affine on each
  // piece, so piece corners generate the exact image.
  const auto& sv = s.vertices();
  const int t = static_cast<int>(sv.size());
  const double span = 1.0 + hausdorff_origin(x);
  for (int j = 0; j < t; ++j) {
    const Vec& va = sv[j];
    const Vec& vb = sv[(j + 1) % t];
    const double na = va.lpNorm<Eigen::Infinity>();
    const double nb = vb.lpNorm<Eigen::Infinity>();
    std::vector<Vec> piece = x.vertices();
    piece = clip_halfplane(
        piece, [&](const Vec& pnt) { return cross2(va, pnt) / na; },
        1e-9 * span);
    piece = clip_halfplane(
        piece, [&](const Vec& pnt) { return cross2(pnt, vb) / nb; },
        1e-9 * span);
    for (const Vec& w : piece) {
      Vec z;
      if (!cone_multipliers(va, vb, w, 1e-6, &z)) continue;
      for (int l = 0; l < q; ++l) {
        const Vec u = z(0) * ctrl[j][l] + z(1) * ctrl[(j + 1) % t][l];
        pts.push_back(a_at[l] * w + sys.b * u);
      }
    }
  }
  return pts;
}

Polytope select_inner_shape(const Polytope& maximal, int target_vertices) {
  if (maximal.dim() != 2)
    throw UnsupportedError("seed selection implemented for polygons");
  if (!maximal.is_pc_set())
    throw PcSetError("seed selection needs a proper C-set");
  const auto& v = maximal.vertices();
  const int m = static_cast<int>(v.size());
  if (target_vertices < 3 || target_vertices > m)
    throw ConfigError("requested vertex count must lie in [3, #vertices]");

  std::vector<int> comb(target_vertices);
  std::iota(comb.begin(), comb.end(), 0);
  const auto next_comb = [&]() {
    int i = target_vertices - 1;
    while (i >= 0 && comb[i] == m - target_vertices + i) --i;
    if (i < 0) return false;
    ++comb[i];
    for (int j = i + 1; j < target_vertices; ++j) comb[j] = comb[j - 1] + 1;
    return true;
  };

  bool found = false;
  double best_ratio = std::numeric_limits<double>::infinity();
  Polytope best;
  do {
    std::vector<Vec> pick;
    for (int c : comb) pick.push_back(v[c]);
    Polytope cand;
    try {
      cand = Polytope::from_vertices(pick);
    } catch (const DegenerateInputError&) {
      continue;
    }
    if (!cand.is_pc_set() || cand.num_vertices() != target_vertices) continue;
    // Strict improvement keeps the lexicographically first subset on ties.
    const double ratio = set_gauge(cand, maximal);
    if (ratio < best_ratio - 1e-12) {
      best = std::move(cand);
      best_ratio = ratio;
      found = true;
    }
  } while (next_comb());

  if (!found)
    throw DegenerateInputError("no proper C-set vertex subset of that size");
  return best;
}

}  // namespace tmpc
