#pragma once

#include <utility>
#include <vector>

#include "tmpc/types.hpp"

namespace tmpc {

/* Closed halfspace a . x <= b with the normal scaled so that |a|_inf = 1. */
struct Halfspace {
  Vec a;
  double b = 0.0;
};

Halfspace normalized(Halfspace h);

/* Bounded convex polytope carrying both representations at once:
 *  - vertices(): extreme points only (counter-clockwise order when dim()==2),
 *  - halfspaces(): irredundant normalized facet inequalities.
 * Exact vertex<->facet conversion is implemented for dimensions 1 to 3,
 * which covers everything the controller needs; higher dimensions are
 * rejected rather than approximated.
 *
 * Construction rejects empty, unbounded and lower-dimensional inputs.  The
 * one deliberate exception is homothety()/scale() with factor zero, whose
 * singleton result is a legitimate value (a tube cross-section pinched to a
 * point) but is excluded from operations that require full dimension.
 */
class Polytope {
 public:
  Polytope() = default;

  static Polytope from_vertices(const std::vector<Vec>& points);
  static Polytope from_halfspaces(const std::vector<Halfspace>& halfspaces);

  /* Axis-aligned box |x_i| <= radii_i (all radii strictly positive). */
  static Polytope box(const Vec& radii);

  /* center + factor * shape  (factor >= 0; factor == 0 gives {center}). */
  static Polytope homothety(const Vec& center, double factor,
                            const Polytope& shape);

  int dim() const { return dim_; }
  bool is_singleton() const { return verts_.size() == 1; }

  /* Proper C-set test: compact, convex (by construction) and the origin in
   * the interior, i.e. every normalized facet offset strictly positive. */
  bool is_pc_set() const;

  const std::vector<Vec>& vertices() const { return verts_; }
  const std::vector<Halfspace>& halfspaces() const { return hs_; }
  int num_vertices() const { return static_cast<int>(verts_.size()); }
  int num_halfspaces() const { return static_cast<int>(hs_.size()); }

  /* Consistency audit used by the tests: vertices satisfy every facet, every
   * facet is supported by some vertex. */
  bool reps_consistent(double tol = 1e-7) const;

 private:
  int dim_ = 0;
  std::vector<Vec> verts_;
  std::vector<Halfspace> hs_;
};

/* Minkowski gauge of x with respect to a proper C-set S:
 * psi_S(x) = inf { t >= 0 : x in t S } = max_i (a_i . x) / b_i. */
double gauge(const Polytope& s, const Vec& x);

/* Set gauge Psi_S(X) = sup_{x in X} psi_S(x); the supremum is attained at a
 * vertex, so only the vertex list of X is consulted. */
double set_gauge(const Polytope& s, const Polytope& x);
double set_gauge(const Polytope& s, const std::vector<Vec>& points);

Polytope scale(const Polytope& x, double factor);
Polytope translate(const Polytope& x, const Vec& offset);

bool contains_point(const Polytope& a, const Vec& x, double tol = kGeomEps);
bool contains_set(const Polytope& a, const Polytope& b, double tol = kGeomEps);

/* True when the vertex set is closed under negation, i.e. S = -S. */
bool negation_symmetric(const Polytope& s, double tol = kGeomEps);

Polytope intersect(const Polytope& a, const Polytope& b);

/* Orthogonal projection onto the first keep_dims coordinates, computed by
 * Fourier-Motzkin elimination with LP-based redundancy removal after every
 * eliminated variable. */
Polytope project(const Polytope& p, int keep_dims);

/* Support function: max over vertices of dir . v. */
double support(const Polytope& p, const Vec& dir);

/* Distance-to-origin radius: max over vertices of the infinity norm. */
double hausdorff_origin(const Polytope& x);

/* Largest r with the box r*B_inf contained in S (S a proper C-set). */
double inner_box_radius(const Polytope& s);

/* Extreme points of a point cloud; each candidate is kept iff an LP places
 * it outside the hull of the others. */
std::vector<Vec> remove_redundant_vertices(const std::vector<Vec>& points);

/* Irredundant subsystem of a halfspace list; each row is dropped iff
 * maximizing its left-hand side over the remaining rows cannot exceed its
 * offset.  Works on unbounded systems (unbounded rows are kept). */
std::vector<Halfspace> remove_redundant_halfspaces(std::vector<Halfspace> rows);

/* Raw Fourier-Motzkin step used by the projection and by controllability
 * preimages: eliminates the trailing coordinates of a (possibly unbounded)
 * inequality system, pruning redundancy after each elimination. */
std::vector<Halfspace> fm_project_rows(std::vector<Halfspace> rows,
                                       int keep_dims);

}  // namespace tmpc
