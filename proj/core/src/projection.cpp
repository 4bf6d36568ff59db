#include "tsg/projection.hpp"

#include <cmath>

#include "tsg/errors.hpp"
#include "tsg/lp.hpp"

namespace tsg {

namespace {
constexpr double kTieTol = 1e-12;       // relative tie detection on bounds
constexpr double kInteriorTol = 1e-10;  // emptiness threshold on radius
constexpr double kAnchorSlackTol = 1e-9;  // rounding allowance for anchors on a face
}  // namespace

bool is_feasible(const Eigen::VectorXd& y, const Polytope& poly, double tol) {
  for (int i = 0; i < poly.rows(); ++i) {
    if (poly.A.row(i).dot(y) > poly.b(i) + tol) return false;
  }
  return true;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
  Eigen::VectorXd e = shifted.array().exp();
  return e / e.sum();
}

ProjectionResult alpha_forward(const Eigen::VectorXd& s, const Polytope& poly) {
  const Eigen::VectorXd& y0 = poly.interior_point;
  const int m = poly.rows();

  // u_i for candidate rows; rows with d_i <= 0 never bind.
  Eigen::VectorXd u = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
  double umin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    double ay0 = poly.A.row(i).dot(y0);
    double slack = poly.b(i) - ay0;
    if (slack <= 0.0) {
      if (slack < -kAnchorSlackTol) {
        throw NonInteriorAnchor("projection anchor violates row " +
                                std::to_string(i));
      }
      // Zero-radius regions put the anchor exactly on this face; any outward
      // direction then pins alpha to 0 and the output to the anchor itself.
      slack = 0.0;
    }
    double d = poly.A.row(i).dot(s) - ay0;
    if (d > 0.0) {
      u(i) = slack / d;
      umin = std::min(umin, u(i));
    }
  }

  ProjectionResult res;
  if (umin >= 1.0 - kTieTol) {
    // Feasible input: alpha is exactly 1 and y is s itself, bit for bit. The
    // constant bound is tight; rows tied with 1 join it.
    res.alpha = 1.0;
    res.y = s;
    res.tight_set.push_back(0);
    for (int i = 0; i < m; ++i) {
      if (std::isfinite(u(i)) && u(i) <= 1.0 + kTieTol) res.tight_set.push_back(i + 1);
    }
  } else {
    res.alpha = umin;
    res.y = umin * s + (1.0 - umin) * y0;
    for (int i = 0; i < m; ++i) {
      if (std::isfinite(u(i)) && u(i) <= umin * (1.0 + kTieTol)) {
        res.tight_set.push_back(i + 1);
      }
    }
  }
  return res;
}

Eigen::VectorXd alpha_backward(const Eigen::VectorXd& s, const Polytope& poly,
                               const ProjectionResult& fwd,
                               const Eigen::VectorXd& upstream) {
  const Eigen::VectorXd& y0 = poly.interior_point;

  Eigen::VectorXd grad_alpha = Eigen::VectorXd::Zero(s.size());
  bool constant_only = fwd.tight_set.size() == 1 && fwd.tight_set[0] == 0;
  if (!constant_only) {
    for (int j : fwd.tight_set) {
      if (j == 0) continue;  // constant bound: zero gradient, still counted
      int row = j - 1;
      double ay0 = poly.A.row(row).dot(y0);
      double d = poly.A.row(row).dot(s) - ay0;
      double u = (poly.b(row) - ay0) / d;
      grad_alpha -= (u / d) * poly.A.row(row).transpose();
    }
    grad_alpha /= static_cast<double>(fwd.tight_set.size());
  }

  return fwd.alpha * upstream + upstream.dot(s - y0) * grad_alpha;
}

namespace {

ChebyshevResult chebyshev_impl(const Eigen::MatrixXd& A,
                               const Eigen::VectorXd& b,
                               const Eigen::VectorXd& weights) {
  // Variables: center (n) and radius r; maximize r subject to
  //   a_i . y + w_i r <= b_i.
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());
  LinearProgram lp(n + 1);
  lp.objective(n) = 1.0;
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd row(n + 1);
    row.head(n) = A.row(i);
    row(n) = weights(i);
    lp.add_le(row, b(i));
  }
  LpSolution sol = solve_lp(lp);
  if (sol.status == LpStatus::Unbounded || sol.status == LpStatus::IterationLimit) {
    throw NumericsError(std::string("chebyshev center: ") + to_string(sol.status));
  }
  if (sol.status != LpStatus::Optimal || sol.value < -kInteriorTol) {
    throw InfeasibleRisk("chebyshev center: empty region");
  }
  // A zero optimum is a nonempty region with no interior (a face); the
  // center is still well-defined and callers treat it as a pinned anchor.
  ChebyshevResult res;
  res.center = sol.x.head(n);
  res.radius = std::max(sol.value, 0.0);
  return res;
}

}  // namespace

ChebyshevResult chebyshev_center(const Eigen::MatrixXd& A,
                                 const Eigen::VectorXd& b) {
  Eigen::VectorXd w(A.rows());
  for (int i = 0; i < A.rows(); ++i) w(i) = A.row(i).norm();
  return chebyshev_impl(A, b, w);
}

ChebyshevResult chebyshev_center_on_simplex(const Eigen::MatrixXd& A,
                                            const Eigen::VectorXd& b) {
  const int n = static_cast<int>(A.cols());
  const int m = static_cast<int>(A.rows());

  if (n == 1) {
    // Single-team degenerate case: the simplex is the point (1). Use the raw
    // slack as the radius so the usual positivity check still screens
    // infeasible rows.
    Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
    double slack = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) slack = std::min(slack, b(i) - A(i, 0));
    if (slack < -kInteriorTol) {
      throw InfeasibleRisk("chebyshev center: single-team polytope infeasible");
    }
    return {y, std::max(slack, 0.0)};
  }

  // Eliminate y_n = 1 - sum y'. Reduced row: a' = a_head - a_n, rhs' =
  // b - a_n. The ball radius is measured in the subspace metric, so each row
  // is weighted by the norm of its normal projected onto {sum = 0}:
  // ||P a||^2 = ||a||^2 - (sum a)^2 / n.
  Eigen::MatrixXd Ar(m, n - 1);
  Eigen::VectorXd br(m), w(m);
  std::vector<int> kept;
  kept.reserve(m);
  for (int i = 0; i < m; ++i) {
    double an = A(i, n - 1);
    Eigen::VectorXd ar =
        (A.row(i).head(n - 1).transpose().array() - an).matrix();
    double rhs = b(i) - an;
    double sum_a = A.row(i).sum();
    double wsq = A.row(i).squaredNorm() - sum_a * sum_a / n;
    if (wsq <= 1e-24) {
      // Constant on the subspace: vacuous if satisfied, hopeless otherwise.
      if (rhs < -1e-12) {
        throw InfeasibleRisk("chebyshev center: constant row infeasible on simplex");
      }
      continue;
    }
    Ar.row(kept.size()) = ar.transpose();
    br(kept.size()) = rhs;
    w(kept.size()) = std::sqrt(wsq);
    kept.push_back(i);
  }
  const int mk = static_cast<int>(kept.size());
  ChebyshevResult red = chebyshev_impl(Ar.topRows(mk), br.head(mk), w.head(mk));

  ChebyshevResult res;
  res.center = Eigen::VectorXd(n);
  res.center.head(n - 1) = red.center;
  res.center(n - 1) = 1.0 - red.center.sum();
  res.radius = red.radius;
  return res;
}

}  // namespace tsg
