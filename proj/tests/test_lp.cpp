#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "tsg/lp.hpp"
#include "tsg/rng.hpp"

using namespace tsg;

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

// Exhaustive vertex enumeration for  max c.x, A x <= b, 0 <= x <= ub.
// Every vertex of a bounded polyhedron is the solution of n active
// constraints; small enough here to try all subsets.
double brute_force_lp_max(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                          const Eigen::VectorXd& b, const Eigen::VectorXd& ub) {
  const int n = static_cast<int>(c.size());
  const int m = static_cast<int>(A.rows());
  // Constraint pool: m rows, n lower bounds, n upper bounds.
  const int total = m + 2 * n;
  std::vector<int> pick(n);
  double best = -std::numeric_limits<double>::infinity();

  std::vector<int> idx(total);
  for (int i = 0; i < total; ++i) idx[i] = i;

  std::vector<int> comb(n);
  // Iterate over all n-subsets of the pool.
  std::function<void(int, int)> rec = [&](int start, int k) {
    if (k == n) {
      Eigen::MatrixXd M(n, n);
      Eigen::VectorXd rhs(n);
      for (int i = 0; i < n; ++i) {
        int ci = comb[i];
        if (ci < m) {
          M.row(i) = A.row(ci);
          rhs(i) = b(ci);
        } else if (ci < m + n) {
          M.row(i).setZero();
          M(i, ci - m) = 1.0;
          rhs(i) = 0.0;  // lower bound x_j = 0
        } else {
          M.row(i).setZero();
          M(i, ci - m - n) = 1.0;
          rhs(i) = ub(ci - m - n);
        }
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
      if (lu.rank() < n) return;
      Eigen::VectorXd x = lu.solve(rhs);
      // Feasibility of the candidate vertex.
      for (int j = 0; j < n; ++j) {
        if (x(j) < -1e-9 || x(j) > ub(j) + 1e-9) return;
      }
      for (int i = 0; i < m; ++i) {
        if (A.row(i).dot(x) > b(i) + 1e-9) return;
      }
      best = std::max(best, c.dot(x));
      return;
    }
    for (int i = start; i <= total - (n - k); ++i) {
      comb[k] = i;
      rec(i + 1, k + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_CASE("two variable maximum lands on the corner") {
  LinearProgram lp(2);
  lp.objective = vec2(1.0, 1.0);
  lp.add_le(vec2(1.0, 0.0), 1.0);
  lp.add_le(vec2(0.0, 1.0), 2.0);
  lp.lower.setZero();
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.value == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(sol.x(0) == doctest::Approx(1.0));
  CHECK(sol.x(1) == doctest::Approx(2.0));
}

TEST_CASE("equality row pins the simplex") {
  LinearProgram lp(2);
  lp.objective = vec2(1.0, 0.0);
  lp.add_eq(vec2(1.0, 1.0), 1.0);
  lp.lower.setZero();
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.value == doctest::Approx(1.0));
  CHECK(sol.x(0) == doctest::Approx(1.0));
  CHECK(sol.x(1) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("contradictory bounds report infeasible") {
  LinearProgram lp(1);
  lp.objective(0) = 1.0;
  lp.add_le(Eigen::VectorXd::Ones(1), 0.0);  // x <= 0
  lp.lower(0) = 1.0;                         // x >= 1
  CHECK(solve_lp(lp).status == LpStatus::Infeasible);
}

TEST_CASE("free improving ray reports unbounded") {
  LinearProgram lp(1);
  lp.objective(0) = 1.0;
  lp.lower(0) = 0.0;
  CHECK(solve_lp(lp).status == LpStatus::Unbounded);
}

TEST_CASE("negative costs with free variables still solve") {
  // min-style problem written as max of a negated objective, free variable.
  LinearProgram lp(2);
  lp.objective = vec2(-1.0, -2.0);
  lp.add_le(vec2(-1.0, -1.0), -3.0);  // x + y >= 3
  lp.lower(1) = 0.0;                  // y >= 0, x free
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  // Best: put everything on x (cheapest), y = 0, x = 3.
  CHECK(sol.value == doctest::Approx(-3.0));
}

TEST_CASE("heavily degenerate doubly stochastic program terminates") {
  // All-ones objective over the Birkhoff polytope: every vertex optimal,
  // every pivot degenerate when started from a permutation-like basis.
  const int n = 4;
  LinearProgram lp(n * n);
  lp.objective.setOnes();
  lp.lower.setZero();
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n * n);
    Eigen::VectorXd col = Eigen::VectorXd::Zero(n * n);
    for (int j = 0; j < n; ++j) {
      row(i * n + j) = 1.0;
      col(j * n + i) = 1.0;
    }
    lp.add_eq(row, 1.0);
    lp.add_eq(col, 1.0);
  }
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.value == doctest::Approx(static_cast<double>(n)).epsilon(1e-9));
}

TEST_CASE("random bounded programs match vertex enumeration") {
  Rng rng(20240817);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5, m = 8;
    Eigen::MatrixXd A(m, n);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
    }
    Eigen::VectorXd ub(n);
    for (int j = 0; j < n; ++j) ub(j) = rng.uniform(0.5, 2.0);
    // Interior witness keeps the program feasible by construction.
    Eigen::VectorXd x0(n);
    for (int j = 0; j < n; ++j) x0(j) = rng.uniform(0.1, 0.9) * ub(j);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) b(i) = A.row(i).dot(x0) + rng.uniform(0.1, 1.0);
    Eigen::VectorXd c(n);
    for (int j = 0; j < n; ++j) c(j) = rng.uniform(-1.0, 1.0);

    LinearProgram lp(n);
    lp.objective = c;
    for (int i = 0; i < m; ++i) lp.add_le(A.row(i).transpose(), b(i));
    lp.lower.setZero();
    lp.upper = ub;

    LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    double oracle = brute_force_lp_max(c, A, b, ub);
    CHECK(std::abs(sol.value - oracle) <= 1e-6);
    // The reported point must actually attain the reported value.
    CHECK(std::abs(c.dot(sol.x) - sol.value) <= 1e-8);
    for (int i = 0; i < m; ++i) CHECK(A.row(i).dot(sol.x) <= b(i) + 1e-8);
  }
}
