#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tsg/polytope.hpp"

namespace tsg {

// A screening game over passenger categories <theta, kappa>: theta is an
// uncontrollable risk level with prior probability, kappa the flight. Teams
// are subsets of screening resources; screening a passenger with team t
// detects an attack of method m with probability E[t][m]. Categories are
// indexed theta-major: c = theta * num_flights + kappa.
struct GameInstance {
  int num_methods = 0;
  std::vector<double> risk_levels;      // prior P_theta, sums to 1
  std::vector<double> flights;          // departure minute per kappa
  std::vector<double> resources;        // screening rate f_r (passengers/min)
  std::vector<std::vector<int>> teams;  // resource index subsets
  Eigen::MatrixXd efficacies;           // teams x methods, in [0, 1]
  Eigen::MatrixXd u_plus;               // flights x methods, detected
  Eigen::MatrixXd u_minus;              // flights x methods, undetected
  std::vector<double> risk_thresholds;  // psi_theta >= 0

  int num_risk_levels() const { return static_cast<int>(risk_levels.size()); }
  int num_flights() const { return static_cast<int>(flights.size()); }
  int num_resources() const { return static_cast<int>(resources.size()); }
  int num_teams() const { return static_cast<int>(teams.size()); }
  int num_categories() const { return num_risk_levels() * num_flights(); }

  int category_index(int theta, int kappa) const {
    return theta * num_flights() + kappa;
  }
  std::pair<int, int> category_parts(int c) const {
    return {c / num_flights(), c % num_flights()};
  }
};

struct InstanceConfig {
  int methods = 3;
  int risk_levels = 5;
  int resources = 5;
  int teams = 10;
  int flights = 10;
  int team_size = 2;
  double rate_min = 0.10, rate_max = 0.22;  // screening rates f_r
  double util_min = 1.0, util_max = 10.0;   // attacker success draw
  double vacuous_psi = 1e6;  // generated instances start unconstrained
};

struct ValidationReport {
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
};

// Structural checks: shapes agree, priors form a distribution, efficacies in
// [0,1], u_plus > u_minus, rates positive, team members valid and distinct.
ValidationReport validate_instance(const GameInstance& inst);

// Random instance in the benchmark family: zero-sum utilities from an
// attacker success draw in [util_min, util_max] (u_plus = 0, u_minus =
// -draw), per-resource efficacies uniform in [0,1] composed into team
// efficacies as 1 - prod(1 - e_r), teams drawn as distinct random subsets of
// size team_size, uniform prior, departures sampled inside morning / midday /
// evening banks. Throws ConfigError if more distinct teams are requested than
// exist.
GameInstance sample_instance(const InstanceConfig& cfg, std::uint64_t seed);

// z_m(pi) = sum_t E[t][m] pi_t
double detection_prob(const GameInstance& inst, const Eigen::VectorXd& pi,
                      int method);

// U_{kappa,m}(pi) = z_m u_plus + (1 - z_m) u_minus
double defender_utility(const GameInstance& inst, const Eigen::VectorXd& pi,
                        int kappa, int method);

struct RiskProfile {
  std::vector<double> u_theta;  // min over kappa, m of defender utility
  double total = 0.0;           // sum_theta P_theta * u_theta
};

// Worst-case utility per risk level under per-category mixtures.
RiskProfile risk_profile(const GameInstance& inst,
                         const std::vector<Eigen::VectorXd>& actions);

// Feasible action polytope of category c: one row per attack method,
//   -sum_t E[t][m] pi_t <= -zbar_{c,m},
//   zbar = (-psi_theta / P_theta - u_minus) / (u_plus - u_minus),
// plus nonnegativity rows -pi_t <= 0. Rows with zbar <= 0 are implied by
// nonnegativity and dropped, so a fully slack threshold yields the bare
// simplex. The anchor is the Chebyshev center on the simplex; throws
// InfeasibleRisk when no strictly interior mixture exists.
Polytope build_polytope(const GameInstance& inst, int category);

std::vector<Polytope> build_all_polytopes(const GameInstance& inst);

// JSON round trip. Serialization uses shortest round-trip number formatting,
// so save/load reproduces every finite double bit for bit.
std::string instance_to_json(const GameInstance& inst);
GameInstance instance_from_json(const std::string& text);
void save_instance(const GameInstance& inst, const std::string& path);
GameInstance load_instance(const std::string& path);

// FNV-1a over the canonical JSON form; checkpoints store this to detect
// instance/policy mismatches.
std::uint64_t instance_hash(const GameInstance& inst);

}  // namespace tsg
