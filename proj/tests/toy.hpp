#pragma once

// Hand-built miniature games used across the unit tests. Kept tiny so every
// expected number can be verified by hand.

#include <Eigen/Dense>
#include <vector>

#include "tsg/environment.hpp"
#include "tsg/game.hpp"

namespace tsg::toy {

// One risk level, one flight, one team on one resource. The simplex is the
// single point (1), so policies have no freedom at all.
inline GameInstance single_team() {
  GameInstance g;
  g.num_methods = 1;
  g.risk_levels = {1.0};
  g.flights = {120.0};
  g.resources = {0.2};
  g.teams = {{0}};
  g.efficacies = Eigen::MatrixXd::Constant(1, 1, 0.7);
  g.u_plus = Eigen::MatrixXd::Constant(1, 1, 0.0);
  g.u_minus = Eigen::MatrixXd::Constant(1, 1, -5.0);
  g.risk_thresholds = {1e6};
  return g;
}

// Two singleton teams with identical detection but different screening
// speeds: detection-wise interchangeable, queue-wise very much not. With the
// vacuous threshold the feasible set is the whole simplex.
inline GameInstance fast_slow(double fast = 0.3, double slow = 0.1,
                              double efficacy = 0.6, double psi = 1e6,
                              std::vector<double> departures = {60.0}) {
  GameInstance g;
  g.num_methods = 1;
  g.risk_levels = {1.0};
  g.flights = std::move(departures);
  g.resources = {fast, slow};
  g.teams = {{0}, {1}};
  g.efficacies = Eigen::MatrixXd::Constant(2, 1, efficacy);
  g.u_plus = Eigen::MatrixXd::Constant(
      static_cast<int>(g.flights.size()), 1, 0.0);
  g.u_minus = Eigen::MatrixXd::Constant(
      static_cast<int>(g.flights.size()), 1, -4.0);
  g.risk_thresholds = {psi};
  return g;
}

// Three teams over two resources with distinct efficacies, one attack
// method, one flight. With a moderate threshold the risk rows genuinely cut
// the simplex, which makes projections non-trivial.
inline GameInstance three_team(double psi = 0.9) {
  GameInstance g;
  g.num_methods = 1;
  g.risk_levels = {1.0};
  g.flights = {90.0};
  g.resources = {0.25, 0.12};
  g.teams = {{0}, {1}, {0, 1}};
  g.efficacies = Eigen::MatrixXd(3, 1);
  g.efficacies << 0.35, 0.55, 0.8;
  g.u_plus = Eigen::MatrixXd::Constant(1, 1, 0.0);
  g.u_minus = Eigen::MatrixXd::Constant(1, 1, -3.0);
  g.risk_thresholds = {psi};
  return g;
}

// All passengers of one flight arrive at exactly the same minute, so no
// drain happens between steps.
inline ArrivalTrace burst_at(double t, int category, int count) {
  ArrivalTrace tr;
  for (int i = 0; i < count; ++i) tr.events.push_back({category, t});
  return tr;
}

}  // namespace tsg::toy
