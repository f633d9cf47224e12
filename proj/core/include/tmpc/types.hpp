#pragma once

#include <Eigen/Dense>

namespace tmpc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/* Absolute tolerance for geometric predicates (containment, redundancy,
 * degeneracy).  All set data handled here is desk-scale (coordinates of
 * magnitude <= ~10), so a single absolute epsilon is appropriate. */
inline constexpr double kGeomEps = 1e-9;

/* Residual quality demanded from LP solutions (primal feasibility and
 * duality gap). */
inline constexpr double kLpEps = 1e-8;

/* Slack granted when certifying set inclusions that hold with equality by
 * construction.  Vertices of a maximal contractive set map exactly onto the
 * boundary of the shrunken target (that is what maximality means), so both
 * verification and the vertex-control programs must accept images that
 * overshoot a facet by solver noise.  Relative to the facet offset. */
inline constexpr double kCertTol = 1e-7;

}  // namespace tmpc
