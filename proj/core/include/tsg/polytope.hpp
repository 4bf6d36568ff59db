#pragma once

#include <Eigen/Dense>

namespace tsg {

// Inequality system A y <= b over mixture weights y, together with a strictly
// interior anchor point. The simplex equality (sum y = 1) is implicit: anchors
// live on the simplex and projection inputs come from a softmax, so every
// point handled here already sums to one.
struct Polytope {
  Eigen::MatrixXd A;  // rows x dim
  Eigen::VectorXd b;
  Eigen::VectorXd interior_point;  // strictly inside: A y0 < b componentwise
  double chebyshev_radius = 0.0;

  int dim() const { return static_cast<int>(A.cols()); }
  int rows() const { return static_cast<int>(A.rows()); }
};

// True when A y <= b + tol componentwise.
bool is_feasible(const Eigen::VectorXd& y, const Polytope& poly,
                 double tol = 1e-9);

}  // namespace tsg
