#include "tsg/static_lp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "tsg/errors.hpp"
#include "tsg/lp.hpp"

namespace tsg {

using nlohmann::json;

namespace {

// Per-team utility coefficient for (kappa, method):
// U(pi) = sum_t pi_t [E[t][m] u_plus + (1 - E[t][m]) u_minus].
Eigen::VectorXd utility_coeffs(const GameInstance& inst, int kappa, int m) {
  const double up = inst.u_plus(kappa, m);
  const double um = inst.u_minus(kappa, m);
  Eigen::VectorXd c(inst.num_teams());
  for (int t = 0; t < inst.num_teams(); ++t) {
    const double e = inst.efficacies(t, m);
    c(t) = e * up + (1.0 - e) * um;
  }
  return c;
}

void check_counts(const GameInstance& inst, const std::vector<double>& counts,
                  double window_min) {
  if (static_cast<int>(counts.size()) != inst.num_categories()) {
    throw ConfigError("expected one passenger count per category");
  }
  for (double n : counts) {
    if (!(n >= 0.0)) throw ConfigError("passenger counts must be >= 0");
  }
  if (!(window_min > 0.0)) throw ConfigError("window must be positive");
}

}  // namespace

StaticSolution solve_static_lp(const GameInstance& inst,
                               const std::vector<double>& counts,
                               double window_min) {
  check_counts(inst, counts, window_min);
  const int C = inst.num_categories();
  const int T = inst.num_teams();
  const int H = inst.num_risk_levels();
  const int n = C * T + H;
  auto pi_var = [T](int c, int t) { return c * T + t; };
  auto u_var = [C, T](int theta) { return C * T + theta; };

  LinearProgram lp(n);
  for (int theta = 0; theta < H; ++theta) {
    lp.objective(u_var(theta)) = inst.risk_levels[theta];
  }
  for (int c = 0; c < C; ++c) {
    for (int t = 0; t < T; ++t) lp.lower(pi_var(c, t)) = 0.0;
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    for (int t = 0; t < T; ++t) row(pi_var(c, t)) = 1.0;
    lp.add_eq(row, 1.0);
  }
  for (int theta = 0; theta < H; ++theta) {
    for (int kappa = 0; kappa < inst.num_flights(); ++kappa) {
      const int c = inst.category_index(theta, kappa);
      for (int m = 0; m < inst.num_methods; ++m) {
        Eigen::VectorXd coef = utility_coeffs(inst, kappa, m);
        Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
        row(u_var(theta)) = 1.0;
        for (int t = 0; t < T; ++t) row(pi_var(c, t)) = -coef(t);
        lp.add_le(row, 0.0);
      }
    }
  }
  for (int r = 0; r < inst.num_resources(); ++r) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    bool touched = false;
    for (int t = 0; t < T; ++t) {
      if (std::find(inst.teams[t].begin(), inst.teams[t].end(), r) ==
          inst.teams[t].end()) {
        continue;
      }
      touched = true;
      for (int c = 0; c < C; ++c) row(pi_var(c, t)) += counts[c];
    }
    if (touched) lp.add_le(row, inst.resources[r] * window_min);
  }

  LpSolution sol = solve_lp(lp);
  if (sol.status == LpStatus::Infeasible) {
    throw InfeasibleRisk("no static plan fits the screening capacity");
  }
  if (sol.status != LpStatus::Optimal) {
    throw NumericsError(std::string("static plan solve failed: ") +
                        to_string(sol.status));
  }

  StaticSolution out;
  out.pi.resize(C);
  for (int c = 0; c < C; ++c) {
    Eigen::VectorXd p = sol.x.segment(c * T, T).cwiseMax(0.0);
    double mass = p.sum();
    if (!(mass > 0.0)) throw NumericsError("static plan lost mixture mass");
    out.pi[c] = p / mass;
  }
  RiskProfile profile = risk_profile(inst, out.pi);
  out.u_star = profile.u_theta;
  out.objective = profile.total;
  out.psi_star.resize(H);
  for (int theta = 0; theta < H; ++theta) {
    out.psi_star[theta] = -inst.risk_levels[theta] * out.u_star[theta];
  }

  // The u variables must agree with the profile recomputed from the
  // mixtures; a gap means the solver returned garbage.
  const double scale = std::max(1.0, std::abs(sol.value));
  if (std::abs(out.objective - sol.value) > 1e-6 * scale) {
    throw NumericsError("static plan objective mismatch: lp=" +
                        std::to_string(sol.value) + " recomputed=" +
                        std::to_string(out.objective));
  }
  return out;
}

namespace {

// All length-T nonnegative integer compositions of `total`.
void compositions(int total, int parts, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int k = 0; k <= total; ++k) {
    cur.push_back(k);
    compositions(total - k, parts - 1, cur, out);
    cur.pop_back();
  }
}

double min_utility(const GameInstance& inst, const Eigen::VectorXd& pi,
                   int kappa) {
  double worst = std::numeric_limits<double>::infinity();
  for (int m = 0; m < inst.num_methods; ++m) {
    worst = std::min(worst, defender_utility(inst, pi, kappa, m));
  }
  return worst;
}

}  // namespace

double brute_force_maximin(const GameInstance& inst,
                           const std::vector<double>& counts,
                           double window_min, int grid_divisions) {
  check_counts(inst, counts, window_min);
  if (grid_divisions < 1) throw ConfigError("grid_divisions must be >= 1");
  const int C = inst.num_categories();
  const int T = inst.num_teams();
  const int H = inst.num_risk_levels();

  std::vector<std::vector<int>> grid;
  {
    std::vector<int> cur;
    compositions(grid_divisions, T, cur, grid);
  }
  std::vector<Eigen::VectorXd> points(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    Eigen::VectorXd p(T);
    for (int t = 0; t < T; ++t) {
      p(t) = static_cast<double>(grid[i][t]) / grid_divisions;
    }
    points[i] = std::move(p);
  }

  // Per-resource usage of one unit of mixture mass, per grid point and
  // category weight.
  Eigen::MatrixXd team_uses =
      Eigen::MatrixXd::Zero(inst.num_resources(), T);
  for (int t = 0; t < T; ++t) {
    for (int r : inst.teams[t]) team_uses(r, t) = 1.0;
  }
  Eigen::VectorXd cap(inst.num_resources());
  for (int r = 0; r < inst.num_resources(); ++r) {
    cap(r) = inst.resources[r] * window_min;
  }

  // If even the most demanding joint assignment fits, the capacity rows can
  // never bind and each category optimizes alone.
  bool capacity_vacuous = true;
  {
    Eigen::VectorXd worst = Eigen::VectorXd::Zero(inst.num_resources());
    for (int r = 0; r < inst.num_resources(); ++r) {
      bool reachable = team_uses.row(r).maxCoeff() > 0.0;
      if (!reachable) continue;
      for (int c = 0; c < C; ++c) worst(r) += counts[c];
    }
    capacity_vacuous = (worst.array() <= cap.array() + 1e-12).all();
  }

  if (capacity_vacuous) {
    // Categories decouple; utilities depend on kappa only, so every risk
    // level shares the same per-flight optima.
    double level_min = std::numeric_limits<double>::infinity();
    for (int kappa = 0; kappa < inst.num_flights(); ++kappa) {
      double best = -std::numeric_limits<double>::infinity();
      for (const Eigen::VectorXd& p : points) {
        best = std::max(best, min_utility(inst, p, kappa));
      }
      level_min = std::min(level_min, best);
    }
    double total = 0.0;
    for (int theta = 0; theta < H; ++theta) {
      total += inst.risk_levels[theta] * level_min;
    }
    return total;
  }

  // Joint enumeration with capacity honored exactly on the grid.
  std::vector<Eigen::VectorXd> usage_per_point(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    usage_per_point[i] = team_uses * points[i];
  }
  double best_total = -std::numeric_limits<double>::infinity();
  std::vector<int> choice(C, 0);
  std::vector<double> level_min(H);
  auto recurse = [&](auto&& self, int c, const Eigen::VectorXd& used) -> void {
    if (c == C) {
      for (int theta = 0; theta < H; ++theta) {
        level_min[theta] = std::numeric_limits<double>::infinity();
      }
      for (int cc = 0; cc < C; ++cc) {
        auto [theta, kappa] = inst.category_parts(cc);
        level_min[theta] = std::min(
            level_min[theta], min_utility(inst, points[choice[cc]], kappa));
      }
      double total = 0.0;
      for (int theta = 0; theta < H; ++theta) {
        total += inst.risk_levels[theta] * level_min[theta];
      }
      best_total = std::max(best_total, total);
      return;
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
      Eigen::VectorXd next = used + counts[c] * usage_per_point[i];
      if ((next.array() <= cap.array() + 1e-9).all()) {
        choice[c] = static_cast<int>(i);
        self(self, c + 1, next);
      }
    }
  };
  recurse(recurse, 0, Eigen::VectorXd::Zero(inst.num_resources()));
  if (!std::isfinite(best_total)) {
    throw InfeasibleRisk("no grid plan fits the screening capacity");
  }
  return best_total;
}

namespace {

json vec_json(const std::vector<double>& v) { return json(v); }

}  // namespace

std::string static_solution_to_json(const StaticSolution& sol,
                                    const GameInstance& inst) {
  json j;
  j["instance_hash"] = instance_hash(inst);
  j["objective"] = sol.objective;
  j["u_star"] = vec_json(sol.u_star);
  j["psi_star"] = vec_json(sol.psi_star);
  json mixtures = json::array();
  for (const Eigen::VectorXd& p : sol.pi) {
    json row = json::array();
    for (Eigen::Index t = 0; t < p.size(); ++t) row.push_back(p(t));
    mixtures.push_back(std::move(row));
  }
  j["pi"] = std::move(mixtures);
  return j.dump(2) + "\n";
}

StaticSolution static_solution_from_json(const std::string& text,
                                         const GameInstance& inst) {
  try {
    json j = json::parse(text);
    if (j.at("instance_hash").get<std::uint64_t>() != instance_hash(inst)) {
      throw ConfigError("static plan was solved for a different instance");
    }
    StaticSolution sol;
    sol.objective = j.at("objective").get<double>();
    sol.u_star = j.at("u_star").get<std::vector<double>>();
    sol.psi_star = j.at("psi_star").get<std::vector<double>>();
    for (const json& row : j.at("pi")) {
      Eigen::VectorXd p(row.size());
      for (std::size_t t = 0; t < row.size(); ++t) {
        p(static_cast<Eigen::Index>(t)) = row.at(t).get<double>();
      }
      sol.pi.push_back(std::move(p));
    }
    if (static_cast<int>(sol.pi.size()) != inst.num_categories() ||
        static_cast<int>(sol.u_star.size()) != inst.num_risk_levels() ||
        sol.psi_star.size() != sol.u_star.size()) {
      throw ConfigError("static plan shape mismatch");
    }
    return sol;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("static plan: ") + e.what());
  }
}

void save_static_solution(const StaticSolution& sol, const GameInstance& inst,
                          const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << static_solution_to_json(sol, inst);
}

StaticSolution load_static_solution(const std::string& path,
                                    const GameInstance& inst) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return static_solution_from_json(ss.str(), inst);
}

}  // namespace tsg
