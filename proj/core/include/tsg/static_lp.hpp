#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "tsg/game.hpp"

namespace tsg {

// One-shot maximin screening plan: fixed per-category mixtures chosen before
// the day starts, ignoring queue dynamics.
struct StaticSolution {
  std::vector<Eigen::VectorXd> pi;  // per category, distribution over teams
  std::vector<double> u_star;       // per level: min over kappa, m of utility
  std::vector<double> psi_star;     // -P_theta * u_star_theta
  double objective = 0.0;           // sum_theta P_theta * u_star_theta
};

// Maximize sum_theta P_theta u_theta over per-category mixtures subject to
//   u_theta <= sum_t pi_{<theta,kappa>,t} [E u_plus + (1-E) u_minus]
//     for every kappa and method,
//   sum_c counts_c sum_{t : r in t} pi_{c,t} <= f_r * window_min
//     for every resource r.
// u_star is recomputed from the mixtures, never read off the LP variables.
// Throws InfeasibleRisk when no plan fits the capacity, NumericsError when
// the solver fails.
StaticSolution solve_static_lp(const GameInstance& inst,
                               const std::vector<double>& counts,
                               double window_min = 1440.0);

// Exhaustive grid search over per-category mixtures with simplex step
// 1/grid_divisions, honoring the same capacity rows. Exact on the grid. When
// capacity cannot bind (full mass on any team still fits), the search
// decomposes per category; otherwise it enumerates joint assignments, which
// is only meant for tiny instances.
double brute_force_maximin(const GameInstance& inst,
                           const std::vector<double>& counts,
                           double window_min, int grid_divisions);

// JSON round trip for a solved plan, tagged with the instance hash so a plan
// is never replayed against the wrong instance.
std::string static_solution_to_json(const StaticSolution& sol,
                                    const GameInstance& inst);
StaticSolution static_solution_from_json(const std::string& text,
                                         const GameInstance& inst);
void save_static_solution(const StaticSolution& sol, const GameInstance& inst,
                          const std::string& path);
StaticSolution load_static_solution(const std::string& path,
                                    const GameInstance& inst);

}  // namespace tsg
