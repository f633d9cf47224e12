#include "tmpc/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>

#include "tmpc/errors.hpp"
#include "tmpc/linprog.hpp"

namespace tmpc {

namespace {

constexpr double kDedupeTol = 1e-7;

std::vector<Vec> dedupe_points_(const std::vector<Vec>& pts, double tol) {
  std::vector<Vec> out;
  for (const Vec& p : pts) {
    bool seen = false;
    for (const Vec& q : out) {
      if ((p - q).cwiseAbs().maxCoeff() <= tol) { seen = true; break; }
    }
    if (!seen) out.push_back(p);
  }
  return out;
}

int affine_rank_(const std::vector<Vec>& pts) {
  if (pts.empty()) return -1;
  const int n = static_cast<int>(pts[0].size());
  Vec mean = Vec::Zero(n);
  for (const Vec& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Mat centered(n, static_cast<Eigen::Index>(pts.size()));
  for (size_t i = 0; i < pts.size(); ++i) centered.col(i) = pts[i] - mean;
  Eigen::JacobiSVD<Mat> svd(centered);
  const Vec& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double gate = 1e-9 * std::max(1.0, sv[0]);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv[i] > gate) ++rank;
  return rank;
}

double cross2_(const Vec& o, const Vec& a, const Vec& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

/* Angular-sort hull: anchor at the lexicographically smallest point, sort
 * the rest by polar angle (ties by distance), then a single scan keeping
 * strict left turns.  Returns extreme points in counter-clockwise order. */
std::vector<Vec> hull_2d_(std::vector<Vec> pts) {
  auto lex_less = [](const Vec& p, const Vec& q) {
    if (p[0] != q[0]) return p[0] < q[0];
    return p[1] < q[1];
  };
  std::iter_swap(pts.begin(),
                 std::min_element(pts.begin(), pts.end(), lex_less));
  const Vec anchor = pts[0];
  std::sort(pts.begin() + 1, pts.end(), [&](const Vec& p, const Vec& q) {
    const double c = cross2_(anchor, p, q);
    if (std::abs(c) > 1e-12) return c > 0.0;
    return (p - anchor).squaredNorm() < (q - anchor).squaredNorm();
  });
  std::vector<Vec> st;
  for (const Vec& p : pts) {
    while (st.size() >= 2) {
      const Vec& a = st[st.size() - 2];
      const Vec& b = st.back();
      const double turn = cross2_(a, b, p);
      const double span = ((b - a).norm() * (p - b).norm());
      if (turn <= 1e-9 * std::max(1.0, span)) {
        st.pop_back();
      } else {
        break;
      }
    }
    st.push_back(p);
  }
  return st;
}

std::vector<Halfspace> facets_2d_(const std::vector<Vec>& ccw) {
  std::vector<Halfspace> hs;
  const size_t k = ccw.size();
  for (size_t i = 0; i < k; ++i) {
    const Vec& p = ccw[i];
    const Vec& q = ccw[(i + 1) % k];
    Vec a(2);
    a << q[1] - p[1], p[0] - q[0];  // outward normal of a CCW edge
    Halfspace h{a, a.dot(0.5 * (p + q))};
    hs.push_back(normalized(std::move(h)));
  }
  return hs;
}

/* Supporting-plane enumeration over point triples.  Quartic in the number
 * of points but immune to the coplanar/cospherical degeneracies that trip
 * incremental insertion; the point clouds met here are desk-scale. */
std::vector<Halfspace> facets_3d_(const std::vector<Vec>& pts) {
  const int k = static_cast<int>(pts.size());
  std::vector<Halfspace> planes;
  auto push_unique = [&](Halfspace h) {
    for (const Halfspace& o : planes) {
      if ((o.a - h.a).cwiseAbs().maxCoeff() <= 1e-7 &&
          std::abs(o.b - h.b) <= 1e-7) {
        return;
      }
    }
    planes.push_back(std::move(h));
  };
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      for (int l = j + 1; l < k; ++l) {
        Eigen::Vector3d u = pts[j].head<3>() - pts[i].head<3>();
        Eigen::Vector3d v = pts[l].head<3>() - pts[i].head<3>();
        Eigen::Vector3d n = u.cross(v);
        const double nmax = n.cwiseAbs().maxCoeff();
        if (nmax <= 1e-10) continue;  // (near-)collinear triple
        n /= nmax;
        const double b = n.dot(pts[i].head<3>());
        double dmax = -std::numeric_limits<double>::infinity();
        double dmin = std::numeric_limits<double>::infinity();
        for (const Vec& p : pts) {
          const double d = n.dot(p.head<3>()) - b;
          dmax = std::max(dmax, d);
          dmin = std::min(dmin, d);
        }
        const double tol = 1e-9 * (1.0 + std::abs(b));
        if (dmax <= tol) {
          push_unique(Halfspace{Vec(n), b});
        } else if (dmin >= -tol) {
          push_unique(Halfspace{Vec(-n), -b});
        }
      }
    }
  }
  return planes;
}

LpResult maximize_over_rows_(const Vec& objective,
                             const std::vector<Halfspace>& rows) {
  const int n = static_cast<int>(objective.size());
  LpProblem p;
  p.c = -objective;  // maximize
  p.G.resize(static_cast<Eigen::Index>(rows.size()), n);
  p.g.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    p.G.row(static_cast<Eigen::Index>(i)) = rows[i].a.transpose();
    p.g[static_cast<Eigen::Index>(i)] = rows[i].b;
  }
  p.E = Mat(0, n);
  p.e = Vec(0);
  return solve_lp(p);
}

/* Vertex candidates: intersections of dim-sized subsets of facets that
 * satisfy the whole system. */
std::vector<Vec> enumerate_vertices_(const std::vector<Halfspace>& rows,
                                     int n) {
  const int m = static_cast<int>(rows.size());
  std::vector<Vec> verts;
  std::vector<int> idx(n);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Mat a(n, n);
      Vec b(n);
      for (int r = 0; r < n; ++r) {
        a.row(r) = rows[idx[r]].a.transpose();
        b[r] = rows[idx[r]].b;
      }
      Eigen::FullPivLU<Mat> lu(a);
      lu.setThreshold(1e-10);
      if (!lu.isInvertible()) return;
      const Vec x = lu.solve(b);
      for (const Halfspace& h : rows) {
        if (h.a.dot(x) > h.b + 1e-7) return;
      }
      verts.push_back(x);
      return;
    }
    for (int i = start; i <= m - (n - depth); ++i) {
      idx[depth] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return dedupe_points_(verts, kDedupeTol);
}

}  // namespace

Halfspace normalized(Halfspace h) {
  const double m = h.a.cwiseAbs().maxCoeff();
  if (!(m > 1e-12))
    throw DegenerateInputError("halfspace: zero normal vector");
  h.a /= m;
  h.b /= m;
  return h;
}

std::vector<Vec> remove_redundant_vertices(const std::vector<Vec>& points) {
  std::vector<Vec> kept = dedupe_points_(points, kDedupeTol);
  if (kept.size() <= 1) return kept;
  const int n = static_cast<int>(kept[0].size());
  for (size_t i = 0; i < kept.size();) {
    const size_t k = kept.size() - 1;  // others
    if (k < 1) break;
    /* feasibility: exists w >= 0, sum w = 1, V w = kept[i] */
    LpProblem p;
    p.c = Vec::Zero(static_cast<Eigen::Index>(k));
    p.G = -Mat::Identity(static_cast<Eigen::Index>(k),
                         static_cast<Eigen::Index>(k));
    p.g = Vec::Zero(static_cast<Eigen::Index>(k));
    p.E.resize(n + 1, static_cast<Eigen::Index>(k));
    p.e.resize(n + 1);
    int col = 0;
    for (size_t j = 0; j < kept.size(); ++j) {
      if (j == i) continue;
      p.E.block(0, col, n, 1) = kept[j];
      p.E(n, col) = 1.0;
      ++col;
    }
    p.e.head(n) = kept[i];
    p.e[n] = 1.0;
    const LpResult r = solve_lp(p);
    if (r.status == LpStatus::Optimal) {
      kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(i));
    } else if (r.status == LpStatus::Infeasible) {
      ++i;
    } else {
      throw NumericalError("vertex redundancy LP failed after " +
                           std::to_string(r.iterations) + " iterations");
    }
  }
  return kept;
}

std::vector<Halfspace> remove_redundant_halfspaces(
    std::vector<Halfspace> rows) {
  for (Halfspace& h : rows) h = normalized(std::move(h));
  /* Exact duplicates (and dominated parallel copies) first. */
  std::vector<Halfspace> uniq;
  for (Halfspace& h : rows) {
    bool drop = false;
    for (Halfspace& o : uniq) {
      if ((o.a - h.a).cwiseAbs().maxCoeff() <= 1e-9) {
        o.b = std::min(o.b, h.b);
        drop = true;
        break;
      }
    }
    if (!drop) uniq.push_back(std::move(h));
  }
  if (uniq.size() <= 1) return uniq;

  std::vector<Halfspace> kept = std::move(uniq);
  for (size_t i = 0; i < kept.size();) {
    std::vector<Halfspace> others;
    others.reserve(kept.size() - 1);
    for (size_t j = 0; j < kept.size(); ++j)
      if (j != i) others.push_back(kept[j]);
    const LpResult r = maximize_over_rows_(kept[i].a, others);
    const bool redundant = r.status == LpStatus::Optimal &&
                           -r.objective <= kept[i].b + kGeomEps;
    if (redundant) {
      kept.erase(kept.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  return kept;
}

Polytope Polytope::from_vertices(const std::vector<Vec>& points) {
  if (points.empty()) throw EmptySetError("polytope: no vertices given");
  const int n = static_cast<int>(points[0].size());
  if (n < 1 || n > 3)
    throw UnsupportedError(
        "polytope: exact conversion implemented for dimensions 1..3");
  for (const Vec& p : points) {
    if (p.size() != n) throw DimensionError("polytope: mixed point sizes");
  }
  std::vector<Vec> pts = dedupe_points_(points, kDedupeTol);
  if (affine_rank_(pts) < n)
    throw DegenerateInputError("polytope: vertex set is not full-dimensional");

  Polytope poly;
  poly.dim_ = n;
  if (n == 1) {
    double lo = pts[0][0], hi = pts[0][0];
    for (const Vec& p : pts) {
      lo = std::min(lo, p[0]);
      hi = std::max(hi, p[0]);
    }
    Vec vlo(1), vhi(1), ap(1), am(1);
    vlo << lo; vhi << hi; ap << 1.0; am << -1.0;
    poly.verts_ = {vlo, vhi};
    poly.hs_ = {Halfspace{ap, hi}, Halfspace{am, -lo}};
    return poly;
  }
  if (n == 2) {
    poly.verts_ = hull_2d_(std::move(pts));
    poly.hs_ = facets_2d_(poly.verts_);
    return poly;
  }
  poly.verts_ = remove_redundant_vertices(pts);
  poly.hs_ = remove_redundant_halfspaces(facets_3d_(poly.verts_));
  return poly;
}

Polytope Polytope::from_halfspaces(const std::vector<Halfspace>& halfspaces) {
  if (halfspaces.empty())
    throw UnboundedSetError("polytope: empty halfspace system is unbounded");
  const int n = static_cast<int>(halfspaces[0].a.size());
  if (n < 1 || n > 3)
    throw UnsupportedError(
        "polytope: exact conversion implemented for dimensions 1..3");
  std::vector<Halfspace> rows;
  rows.reserve(halfspaces.size());
  for (const Halfspace& h : halfspaces) {
    if (h.a.size() != n) throw DimensionError("polytope: mixed row sizes");
    rows.push_back(normalized(h));
  }

  /* Interior probe: maximize a uniform slack behind every facet. */
  {
    LpProblem p;
    const int rowsn = static_cast<int>(rows.size());
    p.c = Vec::Zero(n + 1);
    p.c[n] = -1.0;
    p.G.resize(rowsn, n + 1);
    p.g.resize(rowsn);
    for (int i = 0; i < rowsn; ++i) {
      p.G.row(i).head(n) = rows[i].a.transpose();
      p.G(i, n) = 1.0;
      p.g[i] = rows[i].b;
    }
    p.E = Mat(0, n + 1);
    p.e = Vec(0);
    const LpResult r = solve_lp(p);
    if (r.status == LpStatus::Optimal) {
      const double slack = -r.objective;
      if (slack < -kGeomEps)
        throw EmptySetError("polytope: halfspace system is infeasible");
      if (slack <= kGeomEps)
        throw DegenerateInputError(
            "polytope: halfspace system has empty interior");
    } else if (r.status != LpStatus::Unbounded) {
      throw NumericalError("polytope: interior probe LP failed");
    }
  }

  /* Boundedness along every coordinate axis. */
  for (int i = 0; i < n; ++i) {
    for (const double sgn : {1.0, -1.0}) {
      const LpResult r = maximize_over_rows_(sgn * Vec::Unit(n, i), rows);
      if (r.status == LpStatus::Unbounded)
        throw UnboundedSetError("polytope: halfspace system is unbounded");
      if (r.status != LpStatus::Optimal)
        throw NumericalError("polytope: boundedness probe LP failed");
    }
  }

  Polytope poly;
  poly.dim_ = n;
  poly.hs_ = remove_redundant_halfspaces(rows);
  std::vector<Vec> verts = enumerate_vertices_(poly.hs_, n);
  /* Near-parallel row pairs intersect along edges and litter the candidate
   * list; in 2-D the hull absorbs them directly, elsewhere an LP pass
   * filters points lying in the hull of the rest. */
  if (n == 2) {
    verts = hull_2d_(std::move(verts));
  } else {
    verts = remove_redundant_vertices(verts);
  }
  if (static_cast<int>(verts.size()) < n + 1)
    throw DegenerateInputError("polytope: fewer vertices than dimension+1");
  poly.verts_ = std::move(verts);
  return poly;
}

Polytope Polytope::box(const Vec& radii) {
  const int n = static_cast<int>(radii.size());
  if (n < 1 || n > 3) throw UnsupportedError("box: dimension must be 1..3");
  for (int i = 0; i < n; ++i)
    if (!(radii[i] > 0.0))
      throw DegenerateInputError("box: radii must be strictly positive");
  std::vector<Vec> corners;
  const int combos = 1 << n;
  for (int mask = 0; mask < combos; ++mask) {
    Vec v(n);
    for (int i = 0; i < n; ++i)
      v[i] = (mask >> i) & 1 ? radii[i] : -radii[i];
    corners.push_back(v);
  }
  return from_vertices(corners);
}

Polytope Polytope::homothety(const Vec& center, double factor,
                             const Polytope& shape) {
  if (shape.dim() == 0) throw EmptySetError("homothety: empty shape");
  if (center.size() != shape.dim())
    throw DimensionError("homothety: center dimension mismatch");
  if (factor < 0.0)
    throw NegativeScalingError("homothety: negative scaling factor");
  Polytope out;
  out.dim_ = shape.dim();
  out.verts_.reserve(shape.verts_.size());
  if (factor == 0.0) {
    out.verts_.push_back(center);
  } else {
    for (const Vec& v : shape.verts_) out.verts_.push_back(center + factor * v);
  }
  out.hs_.reserve(shape.hs_.size());
  for (const Halfspace& h : shape.hs_)
    out.hs_.push_back(Halfspace{h.a, factor * h.b + h.a.dot(center)});
  return out;
}

bool Polytope::is_pc_set() const {
  if (dim_ == 0 || verts_.size() <= static_cast<size_t>(dim_)) return false;
  for (const Halfspace& h : hs_)
    if (!(h.b > kGeomEps)) return false;
  return true;
}

bool Polytope::reps_consistent(double tol) const {
  for (const Vec& v : verts_) {
    for (const Halfspace& h : hs_) {
      if (h.a.dot(v) > h.b + tol) return false;
    }
  }
  for (const Halfspace& h : hs_) {
    double best = -std::numeric_limits<double>::infinity();
    for (const Vec& v : verts_) best = std::max(best, h.a.dot(v));
    if (best < h.b - tol) return false;
  }
  return true;
}

double gauge(const Polytope& s, const Vec& x) {
  if (!s.is_pc_set())
    throw PcSetError("gauge: set must be a proper C-set");
  if (x.size() != s.dim()) throw DimensionError("gauge: point dimension");
  double g = 0.0;
  for (const Halfspace& h : s.halfspaces())
    g = std::max(g, h.a.dot(x) / h.b);
  return g;
}

double set_gauge(const Polytope& s, const std::vector<Vec>& points) {
  if (points.empty()) throw EmptySetError("set_gauge: empty point list");
  double g = 0.0;
  for (const Vec& p : points) g = std::max(g, gauge(s, p));
  return g;
}

double set_gauge(const Polytope& s, const Polytope& x) {
  return set_gauge(s, x.vertices());
}

Polytope scale(const Polytope& x, double factor) {
  if (factor < 0.0) throw NegativeScalingError("scale: negative factor");
  return Polytope::homothety(Vec::Zero(x.dim()), factor, x);
}

Polytope translate(const Polytope& x, const Vec& offset) {
  return Polytope::homothety(offset, 1.0, x);
}

bool contains_point(const Polytope& a, const Vec& x, double tol) {
  if (x.size() != a.dim()) throw DimensionError("contains_point: dimension");
  for (const Halfspace& h : a.halfspaces())
    if (h.a.dot(x) > h.b + tol) return false;
  return true;
}

bool contains_set(const Polytope& a, const Polytope& b, double tol) {
  if (a.dim() != b.dim()) throw DimensionError("contains_set: dimension");
  for (const Vec& v : b.vertices())
    if (!contains_point(a, v, tol)) return false;
  return true;
}

bool negation_symmetric(const Polytope& s, double tol) {
  const auto& verts = s.vertices();
  for (const Vec& v : verts) {
    bool matched = false;
    for (const Vec& w : verts)
      if ((v + w).lpNorm<Eigen::Infinity>() <= tol) {
        matched = true;
        break;
      }
    if (!matched) return false;
  }
  return true;
}

Polytope intersect(const Polytope& a, const Polytope& b) {
  if (a.dim() != b.dim()) throw DimensionError("intersect: dimension");
  std::vector<Halfspace> rows = a.halfspaces();
  rows.insert(rows.end(), b.halfspaces().begin(), b.halfspaces().end());
  return Polytope::from_halfspaces(rows);
}

std::vector<Halfspace> fm_project_rows(std::vector<Halfspace> rows,
                                       int keep_dims) {
  if (rows.empty()) return rows;
  int d = static_cast<int>(rows[0].a.size());
  if (keep_dims < 1 || keep_dims >= d)
    throw DimensionError("fm_project_rows: bad target dimension");
  while (d > keep_dims) {
    std::vector<Halfspace> pos, neg, zero;
    for (Halfspace& h : rows) {
      const double c = h.a[d - 1];
      if (c > 1e-10) {
        pos.push_back(std::move(h));
      } else if (c < -1e-10) {
        neg.push_back(std::move(h));
      } else {
        zero.push_back(std::move(h));
      }
    }
    std::vector<Halfspace> next;
    for (Halfspace& h : zero) {
      Halfspace t{h.a.head(d - 1), h.b};
      const double m = t.a.cwiseAbs().maxCoeff();
      if (m <= 1e-12) {
        if (t.b < -kGeomEps)
          throw EmptySetError("fm_project_rows: infeasible system");
        continue;  // trivially true row
      }
      next.push_back(normalized(std::move(t)));
    }
    for (const Halfspace& hp : pos) {
      for (const Halfspace& hq : neg) {
        const Vec combo =
            hp.a / hp.a[d - 1] - hq.a / hq.a[d - 1];  // last coord cancels
        const double rhs = hp.b / hp.a[d - 1] - hq.b / hq.a[d - 1];
        Halfspace t{combo.head(d - 1), rhs};
        const double m = t.a.cwiseAbs().maxCoeff();
        if (m <= 1e-12) {
          if (t.b < -kGeomEps)
            throw EmptySetError("fm_project_rows: infeasible system");
          continue;
        }
        next.push_back(normalized(std::move(t)));
      }
    }
    rows = remove_redundant_halfspaces(std::move(next));
    --d;
  }
  return rows;
}

Polytope project(const Polytope& p, int keep_dims) {
  if (p.is_singleton()) {
    if (keep_dims < 1 || keep_dims >= p.dim())
      throw DimensionError("project: bad target dimension");
    Polytope unit = Polytope::box(Vec::Ones(keep_dims));
    return Polytope::homothety(p.vertices()[0].head(keep_dims), 0.0, unit);
  }
  return Polytope::from_halfspaces(fm_project_rows(p.halfspaces(), keep_dims));
}

double support(const Polytope& p, const Vec& dir) {
  if (p.vertices().empty()) throw EmptySetError("support: empty set");
  if (dir.size() != p.dim())
    throw DimensionError("support: direction dimension mismatch");
  double h = -std::numeric_limits<double>::infinity();
  for (const Vec& v : p.vertices()) h = std::max(h, dir.dot(v));
  return h;
}

double hausdorff_origin(const Polytope& x) {
  if (x.vertices().empty()) throw EmptySetError("hausdorff_origin: empty set");
  double r = 0.0;
  for (const Vec& v : x.vertices()) r = std::max(r, v.cwiseAbs().maxCoeff());
  return r;
}

double inner_box_radius(const Polytope& s) {
  if (!s.is_pc_set())
    throw PcSetError("inner_box_radius: set must be a proper C-set");
  double r = std::numeric_limits<double>::infinity();
  for (const Halfspace& h : s.halfspaces())
    r = std::min(r, h.b / h.a.cwiseAbs().sum());
  return r;
}

}  // namespace tmpc
