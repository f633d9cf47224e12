#pragma once

// Periodic contractive set sequences for polytopic LPV systems.
//
// A sequence S_0, ..., S_{M-1} of proper C-sets is lambda-contractive when
// every vertex of S_i can be steered into S_{i+1} (into lambda*S_0 for
// i = M-1) by an admissible input, simultaneously for every vertex of the
// scheduling set.  Because the input matrix is parameter-independent, vertex
// feasibility extends to the whole set by convex interpolation, which is what
// makes the finite vertex certificates below sufficient.
//
// The module provides:
//   * verify_sequence          -- check (or complete) the vertex certificates
//   * maximal_contractive_set  -- fixed point of the one-step backward map
//   * maximal_set_sequence     -- the M = 1 sequence built from the above
//   * forward_propagation_synthesis -- grow S_1, S_2, ... from a seed shape
//   * smallest_m_search        -- exhaustive search over the period length
//   * sequence_control / propagate_points -- the induced vertex-interpolated
//     control law and exact one-step images under it
//   * select_inner_shape       -- pick a low-complexity seed from a polygon

#include <functional>
#include <string>
#include <vector>

#include "tmpc/lpv_system.hpp"
#include "tmpc/polytope.hpp"
#include "tmpc/types.hpp"

namespace tmpc {

// Periodic family of shape sets with its contraction factor and (optionally)
// the per-vertex input certificates.  controls[i][j][l] is the input that
// steers vertex j of sets[i] into the next target when the scheduling
// parameter sits at vertex l of the scheduling set.  The index order matches
// sets[i].vertices() and the scheduling set's vertices().
struct ContractiveSequence {
  std::vector<Polytope> sets;
  double lambda = 0.0;
  std::vector<std::vector<std::vector<Vec>>> controls;

  int period() const { return static_cast<int>(sets.size()); }

  // Periodic shape index sigma(k) = k mod M for any k >= 0.
  int shape_index(int k) const;
};

// One failed vertex certificate.  vertex or theta_vertex is -1 when the
// failure concerns a whole set (e.g. a set escaping the state constraints).
struct VerifyViolation {
  int set = -1;
  int vertex = -1;
  int theta_vertex = -1;
  double margin = 0.0;  // how far past the allowed bound (gauge units)
  std::string reason;
};

struct VerifyReport {
  bool ok = false;
  std::vector<VerifyViolation> violations;
  // Certificates, re-derived when the candidate did not carry any.  Indexed
  // like ContractiveSequence::controls.
  std::vector<std::vector<std::vector<Vec>>> controls;
};

// Check a candidate sequence against the vertex conditions.  When the
// candidate carries controls they are audited as given; otherwise a
// feasibility program per (set, vertex, scheduling vertex) searches for one,
// so the report doubles as a certificate generator for externally produced
// candidates.
VerifyReport verify_sequence(const LpvSystem& sys, const ContractiveSequence& seq);

// Largest lambda-contractive set inside the state constraints: the fixed
// point of Omega <- Pre_lambda(Omega) /\ Omega starting from the state
// constraint set.  Pre is computed by eliminating the input from the
// (state, input) constraint rows.  Throws ConvergenceError when max_iter
// rounds do not reach the fixed point (to the gauge tolerance).
Polytope maximal_contractive_set(const LpvSystem& sys, double lambda,
                                 int max_iter = 500);

// The period-1 sequence whose single shape is the maximal set, with vertex
// certificates attached.
ContractiveSequence maximal_set_sequence(const LpvSystem& sys, double lambda,
                                         int max_iter = 500);

// Vertex control policy used while propagating: maps (step, vertex,
// scheduling vertex index) to an input.  Used to override the built-in
// greedy policy in tests.
using VertexControlFn =
    std::function<Vec(int step, const Vec& vertex, int theta_vertex)>;

enum class SynthesisStatus {
  Success,
  NoContraction,             // ran out of steps before re-entering lambda*S_0
  StateConstraintViolated,   // a propagated set (or vertex control) left X
  DegeneratePropagation,     // propagated vertices collapsed to a thin set
};

const char* to_string(SynthesisStatus s);

struct SynthesisResult {
  SynthesisStatus status = SynthesisStatus::NoContraction;
  ContractiveSequence sequence;    // populated on Success
  int period = 0;                  // M on success
  int fail_step = -1;              // step index for failure statuses
  bool degenerate_final = false;   // last image collapsed but landed inside
                                   // lambda*S_0 (still a success)
  std::vector<int> vertex_counts;  // vertices of S_0..S_{M-1}
};

// Forward propagation: S_{i+1} = conv of the one-step images of S_i's
// vertices under the vertex controls, stopping as soon as the image fits in
// lambda*S_0.  The built-in policy first finds the smallest horizon M whose
// backward reachable corridor of lambda*S_0 covers the seed, then steers
// each vertex as deep into S_0 as its corridor membership allows -- pure
// one-step greed is never used because its minimizers all sit on a single
// gauge ridge, which collapses the propagated set and stalls short of the
// target.  On sign-symmetric problems antipodal vertices receive negated
// inputs so the propagated sets stay symmetric.
SynthesisResult forward_propagation_synthesis(const LpvSystem& sys,
                                              const Polytope& s0, double lambda,
                                              int m_max,
                                              const VertexControlFn& control = {});

struct SmallestMResult {
  SynthesisStatus status = SynthesisStatus::NoContraction;
  ContractiveSequence sequence;  // populated on Success
  int period = 0;
  // Tree states per depth for the successful period: level[i] holds the
  // t0 * q^i reachable vertex states at depth i (t0 = seed vertices, q =
  // scheduling vertices).
  std::vector<std::vector<Vec>> tree_levels;
};

// Exhaustive search for the shortest period: for each M = 1..m_max a single
// program over the full scheduling-vertex successor tree decides whether
// every depth-M leaf can be placed inside lambda*S_0 while intermediate
// levels respect the state constraints.  Exponential in M; intended for
// small instances and cross-checking the forward synthesis.
SmallestMResult smallest_m_search(const LpvSystem& sys, const Polytope& s0,
                                  double lambda, int m_max);

// The control law induced by the vertex certificates: positively homogeneous
// interpolation over the origin-centred fan of sets[step_index], evaluated
// at the scheduling vertex theta_vertex.  Defined on the whole cone spanned
// by each vertex pair, hence usable for any scaling of the shape set.
// Supported for 1- and 2-dimensional shape sets.
Vec sequence_control(const ContractiveSequence& seq, int step_index,
                     const Vec& x, int theta_vertex);

// Convex combination of the vertex-interpolated control over all scheduling
// vertices is not needed: closed loops evaluate at realized theta by
// interpolating the per-vertex laws.  This helper does exactly that.
Vec sequence_control_at_theta(const LpvSystem& sys, const ContractiveSequence& seq,
                              int step_index, const Vec& x, const Vec& theta);

// Exact generators of the one-step image of X (a subset of the step's shape
// set) under the interpolated vertex controls: the returned points, over all
// scheduling vertices and all sector pieces of X, have the image set as
// their convex hull.  Exactness relies on the control law being affine on
// each sector of the fan.
std::vector<Vec> propagate_points(const LpvSystem& sys,
                                  const ContractiveSequence& seq, int k,
                                  const Polytope& x);

// Pick the target_vertices-subset of a polygon's vertices whose hull is the
// tightest inner approximation of the polygon in gauge (smallest set gauge
// of the polygon with respect to the hull; ties: lexicographic index
// order), and return that hull.  Used to extract a low-complexity seed
// shape from the maximal contractive set: the gauge ratio directly bounds
// how many propagation steps a seed needs before re-entering its own
// scaled copy, which angular or area criteria do not.
Polytope select_inner_shape(const Polytope& maximal, int target_vertices);

}  // namespace tmpc
