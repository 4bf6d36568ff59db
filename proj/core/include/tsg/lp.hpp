#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

namespace tsg {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus s);

// maximize objective . x
//   subject to  A_le x <= b_le,  A_eq x = b_eq,  lower <= x <= upper
// Bounds default to free (+-infinity). Rows are dense.
struct LinearProgram {
  Eigen::VectorXd objective;
  std::vector<Eigen::VectorXd> A_le;
  std::vector<double> b_le;
  std::vector<Eigen::VectorXd> A_eq;
  std::vector<double> b_eq;
  Eigen::VectorXd lower, upper;

  explicit LinearProgram(int num_vars = 0) { resize(num_vars); }

  void resize(int num_vars) {
    objective = Eigen::VectorXd::Zero(num_vars);
    lower = Eigen::VectorXd::Constant(num_vars,
                                      -std::numeric_limits<double>::infinity());
    upper = Eigen::VectorXd::Constant(num_vars,
                                      std::numeric_limits<double>::infinity());
  }

  int num_vars() const { return static_cast<int>(objective.size()); }

  void add_le(const Eigen::VectorXd& row, double rhs) {
    A_le.push_back(row);
    b_le.push_back(rhs);
  }
  void add_eq(const Eigen::VectorXd& row, double rhs) {
    A_eq.push_back(row);
    b_eq.push_back(rhs);
  }
};

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
};

// Dense two-phase simplex with Bland's anti-cycling pivot rule.
// Feasibility and optimality tolerances are 1e-8; intended for the small,
// well-scaled programs that arise here (hundreds of rows at most).
LpSolution solve_lp(const LinearProgram& lp);

}  // namespace tsg
