#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "tsg/errors.hpp"
#include "tsg/projection.hpp"
#include "tsg/rng.hpp"

using namespace tsg;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

// Mixture polytope: detection rows -e_k . y <= -z_k over the simplex, plus
// nonnegativity, anchored at the subspace Chebyshev center.
Polytope make_poly(const std::vector<Eigen::VectorXd>& normals,
                   const std::vector<double>& zbar, int dim) {
  const int extra = static_cast<int>(normals.size());
  Polytope p;
  p.A = Eigen::MatrixXd::Zero(extra + dim, dim);
  p.b = Eigen::VectorXd::Zero(extra + dim);
  for (int i = 0; i < extra; ++i) {
    p.A.row(i) = -normals[i].transpose();
    p.b(i) = -zbar[i];
  }
  for (int j = 0; j < dim; ++j) p.A(extra + j, j) = -1.0;
  ChebyshevResult cc = chebyshev_center_on_simplex(p.A, p.b);
  p.interior_point = cc.center;
  p.chebyshev_radius = cc.radius;
  return p;
}

Eigen::VectorXd random_logit_point(Rng& rng, int dim, double scale = 3.0) {
  Eigen::VectorXd logits(dim);
  for (int i = 0; i < dim; ++i) logits(i) = rng.uniform(-scale, scale);
  return softmax(logits);
}

// Gap between the smallest and second-smallest binding ratio; FD checks skip
// near-ties where the derivative genuinely kinks.
double tie_gap(const Eigen::VectorXd& s, const Polytope& poly) {
  const Eigen::VectorXd& y0 = poly.interior_point;
  double best = std::numeric_limits<double>::infinity();
  double second = best;
  for (int i = 0; i < poly.rows(); ++i) {
    double ay0 = poly.A.row(i).dot(y0);
    double d = poly.A.row(i).dot(s) - ay0;
    if (d <= 0.0) continue;
    double u = (poly.b(i) - ay0) / d;
    if (u < best) {
      second = best;
      best = u;
    } else if (u < second) {
      second = u;
    }
  }
  return second - best;
}

}  // namespace

TEST_CASE("softmax basics") {
  Eigen::VectorXd z = softmax(vec2(0.0, 0.0));
  CHECK(z(0) == doctest::Approx(0.5));
  CHECK(z(1) == doctest::Approx(0.5));

  // Max-shift keeps huge logits finite.
  Eigen::VectorXd big = softmax(vec2(1000.0, 0.0));
  CHECK(std::isfinite(big(0)));
  CHECK(big(0) == doctest::Approx(1.0));
  CHECK(big.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("feasible input is returned bit for bit") {
  Eigen::VectorXd e(2);
  e << 0.8, 0.2;
  Polytope poly = make_poly({e}, {0.3}, 2);
  // Interior point itself is feasible; so is anything near it.
  Eigen::VectorXd s = 0.9 * poly.interior_point +
                      0.1 * vec2(0.55, 0.45);
  REQUIRE(is_feasible(s, poly));
  ProjectionResult r = alpha_forward(s, poly);
  CHECK(r.alpha == 1.0);
  CHECK(r.y(0) == s(0));
  CHECK(r.y(1) == s(1));
  REQUIRE(!r.tight_set.empty());
  CHECK(r.tight_set[0] == 0);
}

TEST_CASE("single cut projects onto the cut with the right tight row") {
  // One row y_0 <= 0.6 over the 2-simplex, anchor centered by construction.
  Polytope p;
  p.A = Eigen::MatrixXd::Zero(1, 2);
  p.A(0, 0) = 1.0;
  p.b = Eigen::VectorXd::Constant(1, 0.6);
  p.interior_point = vec2(0.5, 0.5);
  p.chebyshev_radius = 0.1;

  Eigen::VectorXd s = vec2(0.9, 0.1);
  ProjectionResult r = alpha_forward(s, p);
  // u = (0.6 - 0.5) / (0.9 - 0.5) = 0.25.
  CHECK(r.alpha == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(r.y(0) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(r.y(1) == doctest::Approx(0.4).epsilon(1e-12));
  REQUIRE(r.tight_set.size() == 1);
  CHECK(r.tight_set[0] == 1);  // row 0 is entry 1; entry 0 is alpha <= 1
}

TEST_CASE("projection output is always feasible and on the simplex") {
  Rng rng(7);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 2 + static_cast<int>(rng.index(4));  // 2..5 teams
    std::vector<Eigen::VectorXd> normals;
    std::vector<double> zbar;
    const int cuts = 1 + static_cast<int>(rng.index(3));
    for (int k = 0; k < cuts; ++k) {
      Eigen::VectorXd e(dim);
      for (int j = 0; j < dim; ++j) e(j) = rng.uniform(0.0, 1.0);
      // Demand between the simplex minimum and maximum of e . y so the cut
      // is real but keeps an interior.
      double lo = e.minCoeff(), hi = e.maxCoeff();
      normals.push_back(e);
      zbar.push_back(lo + 0.5 * (hi - lo) * rng.uniform(0.2, 0.9));
    }
    Polytope poly;
    try {
      poly = make_poly(normals, zbar, dim);
    } catch (const InfeasibleRisk&) {
      continue;  // the random cuts happened to kill the interior
    }
    for (int i = 0; i < 100; ++i) {
      Eigen::VectorXd s = random_logit_point(rng, dim);
      ProjectionResult r = alpha_forward(s, poly);
      CHECK(is_feasible(r.y, poly, 1e-9));
      CHECK(std::abs(r.y.sum() - 1.0) <= 1e-12);
      CHECK(r.alpha > 0.0);
      CHECK(r.alpha <= 1.0);
      ++checked;
    }
  }
  CHECK(checked >= 5000);
}

TEST_CASE("gradient matches central finite differences off ties") {
  Rng rng(99);
  Eigen::VectorXd e1(3), e2(3);
  e1 << 0.9, 0.4, 0.2;
  e2 << 0.1, 0.7, 0.5;
  Polytope poly = make_poly({e1, e2}, {0.35, 0.3}, 3);

  const double eps = 1e-7;
  int checked = 0;
  for (int trial = 0; trial < 500 && checked < 200; ++trial) {
    Eigen::VectorXd s = random_logit_point(rng, 3);
    ProjectionResult r = alpha_forward(s, poly);
    if (r.alpha >= 1.0) continue;          // feasible branch has dy/ds = I
    if (tie_gap(s, poly) < 1e-4) continue; // kink: subgradient, skip

    Eigen::VectorXd upstream(3);
    for (int j = 0; j < 3; ++j) upstream(j) = rng.uniform(-1.0, 1.0);
    Eigen::VectorXd grad = alpha_backward(s, poly, r, upstream);

    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd sp = s, sm = s;
      sp(j) += eps;
      sm(j) -= eps;
      double lp = upstream.dot(alpha_forward(sp, poly).y);
      double lm = upstream.dot(alpha_forward(sm, poly).y);
      double fd = (lp - lm) / (2.0 * eps);
      double scale = std::max({std::abs(fd), std::abs(grad(j)), 1e-6});
      CHECK(std::abs(grad(j) - fd) / scale <= 1e-5);
    }
    ++checked;
  }
  CHECK(checked >= 100);
}

TEST_CASE("identity gradient on the feasible branch") {
  Eigen::VectorXd e(2);
  e << 0.8, 0.2;
  Polytope poly = make_poly({e}, {0.3}, 2);
  Eigen::VectorXd s = poly.interior_point;
  ProjectionResult r = alpha_forward(s, poly);
  REQUIRE(r.alpha == 1.0);
  Eigen::VectorXd upstream = vec2(0.3, -0.7);
  Eigen::VectorXd grad = alpha_backward(s, poly, r, upstream);
  CHECK(grad(0) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(grad(1) == doctest::Approx(-0.7).epsilon(1e-15));
}

TEST_CASE("projection is continuous across the boundary") {
  Eigen::VectorXd e(2);
  e << 0.9, 0.1;
  Polytope poly = make_poly({e}, {0.4}, 2);
  // Walk a segment of softmax outputs crossing in and out of feasibility.
  Eigen::VectorXd prev;
  const int steps = 2000;
  for (int i = 0; i <= steps; ++i) {
    double t = -6.0 + 12.0 * i / steps;
    Eigen::VectorXd s = softmax(vec2(t, 0.0));
    Eigen::VectorXd y = alpha_forward(s, poly).y;
    if (i > 0) {
      // The map is Lipschitz along the path; 12/steps per move in logit
      // space, softmax and projection both 1-Lipschitz-ish. Generous bound.
      CHECK((y - prev).norm() <= 50.0 / steps);
    }
    prev = y;
  }
}

TEST_CASE("violating anchors are rejected, on-face anchors pin the output") {
  Polytope p;
  p.A = Eigen::MatrixXd::Zero(1, 2);
  p.A(0, 0) = 1.0;
  p.b = Eigen::VectorXd::Constant(1, 0.5);

  p.interior_point = vec2(0.6, 0.4);  // violates the row by 0.1
  CHECK_THROWS_AS(alpha_forward(vec2(0.9, 0.1), p), NonInteriorAnchor);

  // Exactly on the row: a zero-radius face. Outward proposals collapse onto
  // the anchor with alpha 0; proposals on the feasible side still pass
  // through untouched.
  p.interior_point = vec2(0.5, 0.5);
  ProjectionResult out = alpha_forward(vec2(0.9, 0.1), p);
  CHECK(out.alpha == 0.0);
  CHECK((out.y - p.interior_point).cwiseAbs().maxCoeff() == 0.0);

  ProjectionResult in = alpha_forward(vec2(0.1, 0.9), p);
  CHECK(in.alpha == 1.0);
  CHECK((in.y - vec2(0.1, 0.9)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("a detection cut at the attainable maximum leaves one point") {
  // On the 2-simplex, 0.8 y0 + 0.2 y1 >= 0.8 is met only by y = (1, 0): a
  // nonempty region with empty interior. The center is that point and the
  // radius is zero.
  Eigen::MatrixXd A(3, 2);
  A << -0.8, -0.2,
       -1.0,  0.0,
        0.0, -1.0;
  Eigen::VectorXd b(3);
  b << -0.8, 0.0, 0.0;
  ChebyshevResult r = chebyshev_center_on_simplex(A, b);
  CHECK(r.radius >= 0.0);
  CHECK(r.radius <= 1e-12);
  CHECK(r.center(0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.center(1) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("plain chebyshev center of hypercubes") {
  for (int d = 2; d <= 6; ++d) {
    Eigen::MatrixXd A(2 * d, d);
    A.topRows(d) = Eigen::MatrixXd::Identity(d, d);
    A.bottomRows(d) = -Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd b = Eigen::VectorXd::Ones(2 * d);
    ChebyshevResult r = chebyshev_center(A, b);
    CHECK(std::abs(r.radius - 1.0) <= 1e-9);
    CHECK(r.center.cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("plain chebyshev center rejects unbounded and empty regions") {
  Eigen::MatrixXd half(1, 2);
  half << 1.0, 0.0;
  CHECK_THROWS_AS(chebyshev_center(half, Eigen::VectorXd::Ones(1)),
                  NumericsError);

  Eigen::MatrixXd conflict(2, 1);
  conflict << 1.0, -1.0;
  Eigen::VectorXd b(2);
  b << 0.0, -1.0;  // x <= 0 and x >= 1
  CHECK_THROWS_AS(chebyshev_center(conflict, b), InfeasibleRisk);
}

TEST_CASE("simplex chebyshev center of a detection cut") {
  // 0.8 y0 + 0.2 y1 >= 0.5 on the 2-simplex. On the line y1 = 1 - y0 the
  // feasible stretch is y0 in [0.5, 1]; the inscribed center is its midpoint
  // y0 = 0.75 at subspace distance 0.25 * sqrt(2) / 2 from each end.
  Eigen::MatrixXd A(3, 2);
  A << -0.8, -0.2,
       -1.0,  0.0,
        0.0, -1.0;
  Eigen::VectorXd b(3);
  b << -0.5, 0.0, 0.0;
  ChebyshevResult r = chebyshev_center_on_simplex(A, b);
  CHECK(r.center(0) == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(r.center(1) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(r.center.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.radius == doctest::Approx(0.25 * std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("bare simplex centers at the uniform point") {
  for (int d = 2; d <= 5; ++d) {
    Eigen::MatrixXd A = -Eigen::MatrixXd::Identity(d, d);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    ChebyshevResult r = chebyshev_center_on_simplex(A, b);
    for (int j = 0; j < d; ++j) {
      CHECK(r.center(j) == doctest::Approx(1.0 / d).epsilon(1e-9));
    }
    CHECK(r.radius > 0.0);
  }
}

TEST_CASE("single team simplex degenerates to the point one") {
  Eigen::MatrixXd A = -Eigen::MatrixXd::Identity(1, 1);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(1);
  ChebyshevResult r = chebyshev_center_on_simplex(A, b);
  CHECK(r.center(0) == 1.0);
  CHECK(r.radius > 0.0);

  // A row the point (1) cannot satisfy kills the region.
  Eigen::MatrixXd bad(1, 1);
  bad << 1.0;
  Eigen::VectorXd tight = Eigen::VectorXd::Constant(1, 0.5);  // y <= 0.5
  CHECK_THROWS_AS(chebyshev_center_on_simplex(bad, tight), InfeasibleRisk);
}

TEST_CASE("constant-on-simplex rows are screened by sign") {
  // Row proportional to the all-ones vector: sum y <= 2 is vacuous on the
  // simplex, sum y <= 0.5 is impossible.
  Eigen::MatrixXd A(3, 2);
  A << 1.0, 1.0,
       -1.0, 0.0,
       0.0, -1.0;
  Eigen::VectorXd ok(3), bad(3);
  ok << 2.0, 0.0, 0.0;
  bad << 0.5, 0.0, 0.0;
  ChebyshevResult r = chebyshev_center_on_simplex(A, ok);
  CHECK(r.center.sum() == doctest::Approx(1.0));
  CHECK_THROWS_AS(chebyshev_center_on_simplex(A, bad), InfeasibleRisk);
}
