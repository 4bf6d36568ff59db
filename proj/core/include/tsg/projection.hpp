#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tsg/polytope.hpp"

namespace tsg {

// Numerically stable softmax (max-shifted exponentials).
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Result of pulling a point toward the interior anchor until feasible:
//   y = alpha * s + (1 - alpha) * y0.
// tight_set indexes the bounds attaining alpha: entry 0 is the constant bound
// alpha <= 1, entry j >= 1 is polytope row j-1. When s is already feasible the
// set is {0} (plus any rows exactly tied with 1).
struct ProjectionResult {
  Eigen::VectorXd y;
  double alpha = 1.0;
  std::vector<int> tight_set;
};

// Largest step toward s that stays inside the polytope. For each row with
// d_i = a_i.s - a_i.y0 > 0 the feasible step is u_i = (b_i - a_i.y0) / d_i;
// alpha = min(1, min_i u_i). Rows with d_i <= 0 can never bind because the
// anchor never lies outside them. Ties are detected at relative tolerance
// 1e-12. An anchor sitting exactly on a face (a zero-radius region) is legal:
// its rows get zero slack, so any outward step has alpha = 0 and the output
// is the anchor itself. Throws NonInteriorAnchor when the anchor violates a
// row by more than 1e-9.
ProjectionResult alpha_forward(const Eigen::VectorXd& s, const Polytope& poly);

// Vector-Jacobian product of alpha_forward at s: returns dL/ds given
// upstream = dL/dy. Uses the closed form
//   dy/ds = alpha I + (s - y0) grad_alpha^T,
//   grad_alpha = (1/|J|) sum_{j in J} grad u_j,   grad u_j = -u_j a_j / d_j,
// where the constant bound (index 0) contributes a zero gradient. Requires
// the ProjectionResult of a prior alpha_forward at the same s.
Eigen::VectorXd alpha_backward(const Eigen::VectorXd& s, const Polytope& poly,
                               const ProjectionResult& fwd,
                               const Eigen::VectorXd& upstream);

struct ChebyshevResult {
  Eigen::VectorXd center;
  double radius = 0.0;
};

// Chebyshev center of {y : A y <= b} in R^n (no simplex restriction):
//   max r  s.t.  a_i.y + r ||a_i||_2 <= b_i.
// A nonempty region with no interior yields radius 0 (the center sits on a
// face). Throws InfeasibleRisk when the region is empty (best r < -1e-10)
// and NumericsError if it is unbounded.
ChebyshevResult chebyshev_center(const Eigen::MatrixXd& A,
                                 const Eigen::VectorXd& b);

// Chebyshev center of {y : A y <= b, sum y = 1}: eliminates the last
// coordinate via the equality and inscribes the largest ball measured inside
// the simplex's affine subspace. Row normals are therefore weighted by the
// norm of their projection onto the subspace direction {sum = 0}; rows whose
// normal is parallel to the all-ones vector are constant on the subspace and
// only checked for sign. Same error behavior as chebyshev_center.
ChebyshevResult chebyshev_center_on_simplex(const Eigen::MatrixXd& A,
                                            const Eigen::VectorXd& b);

}  // namespace tsg
