#include "tsg/lp.hpp"

#include <cmath>
#include <vector>

namespace tsg {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

constexpr double kTol = 1e-8;    // feasibility / optimality
constexpr double kPivTol = 1e-9; // entry usable as a pivot

// How an original variable maps onto nonnegative standard-form variables.
struct VarMap {
  enum Kind { Shifted, Flipped, Split } kind;
  int col1 = -1;
  int col2 = -1;
  double shift = 0.0;
};

struct Tableau {
  Eigen::MatrixXd T;          // m x (n+1), last column is rhs
  Eigen::RowVectorXd cost;    // 1 x (n+1), reduced costs + negated objective
  std::vector<int> basis;     // basis[i] = column basic in row i
  int iterations = 0;

  int rows() const { return static_cast<int>(T.rows()); }
  int cols() const { return static_cast<int>(T.cols()) - 1; }

  void pivot(int r, int c) {
    T.row(r) /= T(r, c);
    for (int i = 0; i < rows(); ++i) {
      if (i != r && std::abs(T(i, c)) > 0.0) T.row(i) -= T(i, c) * T.row(r);
    }
    if (std::abs(cost(c)) > 0.0) cost -= cost(c) * T.row(r);
    basis[r] = c;
    ++iterations;
  }

  // Dantzig pricing (most negative reduced cost) while the objective makes
  // progress, falling back to Bland's rule (lowest eligible index) after a
  // long degenerate stall so cycling is impossible. The leaving row takes the
  // minimum ratio, ties broken by the smallest basic variable index.
  // `allowed(c)` gates which columns may enter.
  template <typename Allowed>
  LpStatus run(const Allowed& allowed, int iter_limit) {
    const int m = rows(), n = cols();
    constexpr int kStallLimit = 64;  // degenerate pivots before Bland mode
    int stalled = 0;
    while (true) {
      if (iterations > iter_limit) return LpStatus::IterationLimit;
      int enter = -1;
      if (stalled < kStallLimit) {
        double most_negative = -kTol;
        for (int c = 0; c < n; ++c) {
          if (allowed(c) && cost(c) < most_negative) {
            enter = c;
            most_negative = cost(c);
          }
        }
      } else {
        for (int c = 0; c < n; ++c) {
          if (allowed(c) && cost(c) < -kTol) {
            enter = c;
            break;
          }
        }
      }
      if (enter < 0) return LpStatus::Optimal;
      int leave = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < m; ++i) {
        double a = T(i, enter);
        if (a > kPivTol) {
          double ratio = T(i, n) / a;
          if (leave < 0 || ratio < best_ratio ||
              (ratio == best_ratio && basis[i] < basis[leave])) {
            leave = i;
            best_ratio = ratio;
          }
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      const double step = T(leave, n) / T(leave, enter);
      stalled = (step > kTol) ? 0 : stalled + 1;
      pivot(leave, enter);
    }
  }

  // Express the active objective in terms of the current basis.
  void canonicalize_cost() {
    for (int i = 0; i < rows(); ++i) {
      double c = cost(basis[i]);
      if (std::abs(c) > 0.0) cost -= c * T.row(i);
    }
  }
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp) {
  const int n_orig = lp.num_vars();
  const double inf = std::numeric_limits<double>::infinity();

  // Standard-form variables: every original variable becomes one or two
  // nonnegative columns; finite two-sided bounds add an upper-bound row.
  std::vector<VarMap> vmap(n_orig);
  int n_std = 0;
  std::vector<Eigen::VectorXd> extra_rows;
  std::vector<double> extra_rhs;
  for (int j = 0; j < n_orig; ++j) {
    double lo = lp.lower(j), up = lp.upper(j);
    if (lo > up) return {LpStatus::Infeasible, Eigen::VectorXd::Zero(n_orig), 0.0, 0};
    if (std::isfinite(lo)) {
      vmap[j] = {VarMap::Shifted, n_std++, -1, lo};
      if (std::isfinite(up)) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(n_orig);
        row(j) = 1.0;
        extra_rows.push_back(row);
        extra_rhs.push_back(up);
      }
    } else if (std::isfinite(up)) {
      vmap[j] = {VarMap::Flipped, n_std++, -1, up};
    } else {
      vmap[j] = {VarMap::Split, n_std, n_std + 1, 0.0};
      n_std += 2;
    }
  }

  const int m_le = static_cast<int>(lp.A_le.size()) + static_cast<int>(extra_rows.size());
  const int m_eq = static_cast<int>(lp.A_eq.size());
  const int m = m_le + m_eq;
  const int n_slack = m_le;

  // Rewrite a row over original variables into standard-form columns,
  // returning the adjusted rhs.
  auto emit_row = [&](const Eigen::VectorXd& arow, double rhs,
                      Eigen::RowVectorXd& out) {
    out.setZero();
    for (int j = 0; j < n_orig; ++j) {
      double a = arow(j);
      if (a == 0.0) continue;
      const VarMap& vm = vmap[j];
      switch (vm.kind) {
        case VarMap::Shifted:
          out(vm.col1) += a;
          rhs -= a * vm.shift;
          break;
        case VarMap::Flipped:
          out(vm.col1) -= a;
          rhs -= a * vm.shift;
          break;
        case VarMap::Split:
          out(vm.col1) += a;
          out(vm.col2) -= a;
          break;
      }
    }
    return rhs;
  };

  // Assemble rows; slacks first, artificials appended lazily.
  Eigen::MatrixXd rowsA = Eigen::MatrixXd::Zero(m, n_std);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  std::vector<bool> is_le(m, false);
  {
    int r = 0;
    Eigen::RowVectorXd tmp(n_std);
    for (std::size_t i = 0; i < lp.A_le.size(); ++i, ++r) {
      rhs(r) = emit_row(lp.A_le[i], lp.b_le[i], tmp);
      rowsA.row(r) = tmp;
      is_le[r] = true;
    }
    for (std::size_t i = 0; i < extra_rows.size(); ++i, ++r) {
      rhs(r) = emit_row(extra_rows[i], extra_rhs[i], tmp);
      rowsA.row(r) = tmp;
      is_le[r] = true;
    }
    for (std::size_t i = 0; i < lp.A_eq.size(); ++i, ++r) {
      rhs(r) = emit_row(lp.A_eq[i], lp.b_eq[i], tmp);
      rowsA.row(r) = tmp;
    }
  }

  // Count artificials: negated <= rows (slack coefficient turns -1) and all
  // equality rows need one.
  std::vector<bool> negate(m, false);
  int n_art = 0;
  for (int r = 0; r < m; ++r) {
    if (rhs(r) < 0.0) negate[r] = true;
    if (!is_le[r] || negate[r]) ++n_art;
  }

  const int n_total = n_std + n_slack + n_art;
  Tableau tb;
  tb.T = Eigen::MatrixXd::Zero(m, n_total + 1);
  tb.basis.assign(m, -1);

  int slack_at = n_std, art_at = n_std + n_slack;
  std::vector<bool> is_artificial(n_total, false);
  for (int r = 0, sl = 0; r < m; ++r) {
    double sgn = negate[r] ? -1.0 : 1.0;
    tb.T.block(r, 0, 1, n_std) = sgn * rowsA.row(r);
    tb.T(r, n_total) = sgn * rhs(r);
    if (is_le[r]) {
      tb.T(r, slack_at + sl) = sgn * 1.0;
      if (!negate[r]) tb.basis[r] = slack_at + sl;
      ++sl;
    }
    if (tb.basis[r] < 0) {
      tb.T(r, art_at) = 1.0;
      is_artificial[art_at] = true;
      tb.basis[r] = art_at++;
    }
  }

  const int iter_limit = 10000 + 200 * (m + n_total);
  LpSolution sol;
  sol.x = Eigen::VectorXd::Zero(n_orig);

  // Phase 1: minimize the sum of artificials.
  if (n_art > 0) {
    tb.cost = Eigen::RowVectorXd::Zero(n_total + 1);
    for (int c = n_std + n_slack; c < n_total; ++c) tb.cost(c) = 1.0;
    tb.canonicalize_cost();
    LpStatus st = tb.run([](int) { return true; }, iter_limit);
    sol.iterations = tb.iterations;
    if (st != LpStatus::Optimal) {
      // Phase 1 is bounded below by zero, so anything but Optimal here means
      // the iteration cap was hit.
      sol.status = LpStatus::IterationLimit;
      return sol;
    }
    double infeas = -tb.cost(n_total);
    if (infeas > kTol * std::max(1.0, rhs.cwiseAbs().maxCoeff())) {
      sol.status = LpStatus::Infeasible;
      return sol;
    }
    // Drive leftover artificials out of the basis; rows with no real pivot
    // entry are redundant and can stay (their artificial is pinned at zero,
    // and artificial columns are barred from re-entering below).
    for (int r = 0; r < m; ++r) {
      if (!is_artificial[tb.basis[r]]) continue;
      for (int c = 0; c < n_std + n_slack; ++c) {
        if (std::abs(tb.T(r, c)) > kPivTol) {
          tb.pivot(r, c);
          break;
        }
      }
    }
  }

  // Phase 2: minimize the negated objective over standard-form columns.
  tb.cost = Eigen::RowVectorXd::Zero(n_total + 1);
  for (int j = 0; j < n_orig; ++j) {
    double c = lp.objective(j);
    if (c == 0.0) continue;
    const VarMap& vm = vmap[j];
    switch (vm.kind) {
      case VarMap::Shifted: tb.cost(vm.col1) -= c; break;
      case VarMap::Flipped: tb.cost(vm.col1) += c; break;
      case VarMap::Split:
        tb.cost(vm.col1) -= c;
        tb.cost(vm.col2) += c;
        break;
    }
  }
  tb.canonicalize_cost();
  LpStatus st = tb.run(
      [&](int c) { return !is_artificial[c]; }, iter_limit);
  sol.iterations = tb.iterations;
  if (st != LpStatus::Optimal) {
    sol.status = st;
    return sol;
  }

  Eigen::VectorXd xstd = Eigen::VectorXd::Zero(n_total);
  for (int r = 0; r < m; ++r) xstd(tb.basis[r]) = tb.T(r, n_total);
  for (int j = 0; j < n_orig; ++j) {
    const VarMap& vm = vmap[j];
    switch (vm.kind) {
      case VarMap::Shifted: sol.x(j) = vm.shift + xstd(vm.col1); break;
      case VarMap::Flipped: sol.x(j) = vm.shift - xstd(vm.col1); break;
      case VarMap::Split: sol.x(j) = xstd(vm.col1) - xstd(vm.col2); break;
    }
  }
  sol.value = lp.objective.dot(sol.x);
  sol.status = LpStatus::Optimal;
  return sol;
}

}  // namespace tsg
