#include "tsg/game.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tsg/errors.hpp"
#include "tsg/projection.hpp"
#include "tsg/rng.hpp"

namespace tsg {

using nlohmann::json;

ValidationReport validate_instance(const GameInstance& inst) {
  ValidationReport rep;
  auto flag = [&rep](const std::string& msg) { rep.issues.push_back(msg); };

  if (inst.num_methods <= 0) flag("num_methods must be positive");
  if (inst.risk_levels.empty()) flag("risk_levels is empty");
  if (inst.flights.empty()) flag("flights is empty");
  if (inst.resources.empty()) flag("resources is empty");
  if (inst.teams.empty()) flag("teams is empty");

  double prior_sum = 0.0;
  for (double p : inst.risk_levels) {
    if (p <= 0.0) flag("prior probabilities must be positive");
    prior_sum += p;
  }
  if (!inst.risk_levels.empty() && std::abs(prior_sum - 1.0) > 1e-9) {
    flag("prior probabilities must sum to 1");
  }
  for (double f : inst.resources) {
    if (f <= 0.0) flag("screening rates must be positive");
  }
  for (std::size_t t = 0; t < inst.teams.size(); ++t) {
    std::set<int> seen;
    for (int r : inst.teams[t]) {
      if (r < 0 || r >= inst.num_resources()) {
        flag("team " + std::to_string(t) + " references unknown resource");
      }
      if (!seen.insert(r).second) {
        flag("team " + std::to_string(t) + " repeats a resource");
      }
    }
    if (inst.teams[t].empty()) flag("team " + std::to_string(t) + " is empty");
  }
  if (inst.efficacies.rows() != inst.num_teams() ||
      inst.efficacies.cols() != inst.num_methods) {
    flag("efficacies must be teams x methods");
  } else if ((inst.efficacies.array() < 0.0).any() ||
             (inst.efficacies.array() > 1.0).any()) {
    flag("efficacies must lie in [0, 1]");
  }
  if (inst.u_plus.rows() != inst.num_flights() ||
      inst.u_plus.cols() != inst.num_methods ||
      inst.u_minus.rows() != inst.num_flights() ||
      inst.u_minus.cols() != inst.num_methods) {
    flag("utilities must be flights x methods");
  } else if (!((inst.u_plus - inst.u_minus).array() > 0.0).all()) {
    flag("u_plus must exceed u_minus entrywise");
  }
  if (static_cast<int>(inst.risk_thresholds.size()) != inst.num_risk_levels()) {
    flag("risk_thresholds must have one entry per risk level");
  } else {
    for (double psi : inst.risk_thresholds) {
      if (psi < 0.0) flag("risk thresholds must be nonnegative");
    }
  }
  return rep;
}

GameInstance sample_instance(const InstanceConfig& cfg, std::uint64_t seed) {
  // Distinct team count is bounded by the number of size-k subsets.
  double combos = 1.0;
  for (int i = 0; i < cfg.team_size; ++i) {
    combos *= static_cast<double>(cfg.resources - i) / (i + 1);
  }
  if (cfg.teams > combos) {
    throw ConfigError("more distinct teams requested than subsets exist");
  }

  GameInstance inst;
  inst.num_methods = cfg.methods;
  inst.risk_levels.assign(cfg.risk_levels, 1.0 / cfg.risk_levels);
  inst.risk_thresholds.assign(cfg.risk_levels, cfg.vacuous_psi);

  Rng rng(substream(seed, "instance"));

  // Departures inside three daytime banks, sorted.
  const double banks[3][2] = {{390, 570}, {660, 840}, {990, 1260}};
  const double weights[3] = {0.4, 0.2, 0.4};
  inst.flights.resize(cfg.flights);
  for (int k = 0; k < cfg.flights; ++k) {
    double pick = rng.uniform01();
    int bidx = pick < weights[0] ? 0 : (pick < weights[0] + weights[1] ? 1 : 2);
    inst.flights[k] = std::floor(rng.uniform(banks[bidx][0], banks[bidx][1]));
  }
  std::sort(inst.flights.begin(), inst.flights.end());

  inst.resources.resize(cfg.resources);
  for (int r = 0; r < cfg.resources; ++r) {
    inst.resources[r] = rng.uniform(cfg.rate_min, cfg.rate_max);
  }

  // Per-resource efficacies, composed per team below.
  Eigen::MatrixXd res_eff(cfg.resources, cfg.methods);
  for (int r = 0; r < cfg.resources; ++r) {
    for (int m = 0; m < cfg.methods; ++m) res_eff(r, m) = rng.uniform01();
  }

  std::set<std::vector<int>> chosen;
  while (static_cast<int>(chosen.size()) < cfg.teams) {
    std::vector<int> team;
    while (static_cast<int>(team.size()) < cfg.team_size) {
      int r = static_cast<int>(rng.index(cfg.resources));
      if (std::find(team.begin(), team.end(), r) == team.end()) team.push_back(r);
    }
    std::sort(team.begin(), team.end());
    chosen.insert(team);
  }
  inst.teams.assign(chosen.begin(), chosen.end());

  inst.efficacies.resize(cfg.teams, cfg.methods);
  for (int t = 0; t < cfg.teams; ++t) {
    for (int m = 0; m < cfg.methods; ++m) {
      double miss = 1.0;
      for (int r : inst.teams[t]) miss *= 1.0 - res_eff(r, m);
      inst.efficacies(t, m) = 1.0 - miss;
    }
  }

  // Zero-sum: the attacker gains draw on an undetected attack, so the
  // defender scores -draw undetected and 0 detected.
  inst.u_plus = Eigen::MatrixXd::Zero(cfg.flights, cfg.methods);
  inst.u_minus.resize(cfg.flights, cfg.methods);
  for (int k = 0; k < cfg.flights; ++k) {
    for (int m = 0; m < cfg.methods; ++m) {
      inst.u_minus(k, m) = -rng.uniform(cfg.util_min, cfg.util_max);
    }
  }
  return inst;
}

double detection_prob(const GameInstance& inst, const Eigen::VectorXd& pi,
                      int method) {
  return inst.efficacies.col(method).dot(pi);
}

double defender_utility(const GameInstance& inst, const Eigen::VectorXd& pi,
                        int kappa, int method) {
  double z = detection_prob(inst, pi, method);
  return z * inst.u_plus(kappa, method) + (1.0 - z) * inst.u_minus(kappa, method);
}

RiskProfile risk_profile(const GameInstance& inst,
                         const std::vector<Eigen::VectorXd>& actions) {
  RiskProfile prof;
  prof.u_theta.resize(inst.num_risk_levels());
  for (int theta = 0; theta < inst.num_risk_levels(); ++theta) {
    double worst = std::numeric_limits<double>::infinity();
    for (int kappa = 0; kappa < inst.num_flights(); ++kappa) {
      const Eigen::VectorXd& pi = actions[inst.category_index(theta, kappa)];
      for (int m = 0; m < inst.num_methods; ++m) {
        worst = std::min(worst, defender_utility(inst, pi, kappa, m));
      }
    }
    prof.u_theta[theta] = worst;
    prof.total += inst.risk_levels[theta] * worst;
  }
  return prof;
}

Polytope build_polytope(const GameInstance& inst, int category) {
  auto [theta, kappa] = inst.category_parts(category);
  const int n = inst.num_teams();
  const double p = inst.risk_levels[theta];
  const double psi = inst.risk_thresholds[theta];

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  for (int m = 0; m < inst.num_methods; ++m) {
    double up = inst.u_plus(kappa, m), um = inst.u_minus(kappa, m);
    double zbar = (-psi / p - um) / (up - um);
    if (zbar <= 0.0) continue;  // implied by nonnegativity
    rows.push_back(-inst.efficacies.col(m));
    rhs.push_back(-zbar);
  }
  for (int t = 0; t < n; ++t) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(n);
    row(t) = -1.0;
    rows.push_back(row);
    rhs.push_back(0.0);
  }

  Polytope poly;
  poly.A.resize(rows.size(), n);
  poly.b.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    poly.A.row(i) = rows[i].transpose();
    poly.b(i) = rhs[i];
  }

  try {
    ChebyshevResult cheb = chebyshev_center_on_simplex(poly.A, poly.b);
    poly.interior_point = cheb.center;
    poly.chebyshev_radius = cheb.radius;
  } catch (const InfeasibleRisk&) {
    throw InfeasibleRisk("category " + std::to_string(category) +
                         ": risk thresholds admit no interior mixture");
  }
  return poly;
}

std::vector<Polytope> build_all_polytopes(const GameInstance& inst) {
  std::vector<Polytope> polys;
  polys.reserve(inst.num_categories());
  for (int c = 0; c < inst.num_categories(); ++c) {
    polys.push_back(build_polytope(inst, c));
  }
  return polys;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(j.size(), j.at(0).size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& row = j.at(i);
    if (static_cast<Eigen::Index>(row.size()) != m.cols()) {
      throw ConfigError("instance json: ragged matrix");
    }
    for (std::size_t k = 0; k < row.size(); ++k) m(i, k) = row.at(k).get<double>();
  }
  return m;
}

}  // namespace

std::string instance_to_json(const GameInstance& inst) {
  json j;
  j["num_methods"] = inst.num_methods;
  j["risk_levels"] = inst.risk_levels;
  j["flights"] = inst.flights;
  j["resources"] = inst.resources;
  j["teams"] = inst.teams;
  j["efficacies"] = matrix_to_json(inst.efficacies);
  j["utilities"] = {{"u_plus", matrix_to_json(inst.u_plus)},
                    {"u_minus", matrix_to_json(inst.u_minus)}};
  j["risk_thresholds"] = inst.risk_thresholds;
  return j.dump(2) + "\n";
}

GameInstance instance_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("instance json: ") + e.what());
  }
  GameInstance inst;
  try {
    inst.num_methods = j.at("num_methods").get<int>();
    inst.risk_levels = j.at("risk_levels").get<std::vector<double>>();
    inst.flights = j.at("flights").get<std::vector<double>>();
    inst.resources = j.at("resources").get<std::vector<double>>();
    inst.teams = j.at("teams").get<std::vector<std::vector<int>>>();
    inst.efficacies = matrix_from_json(j.at("efficacies"));
    inst.u_plus = matrix_from_json(j.at("utilities").at("u_plus"));
    inst.u_minus = matrix_from_json(j.at("utilities").at("u_minus"));
    inst.risk_thresholds = j.at("risk_thresholds").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("instance json: ") + e.what());
  }
  ValidationReport rep = validate_instance(inst);
  if (!rep.ok()) {
    std::string msg = "instance json failed validation:";
    for (const auto& issue : rep.issues) msg += "\n  " + issue;
    throw ConfigError(msg);
  }
  return inst;
}

void save_instance(const GameInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << instance_to_json(inst);
}

GameInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return instance_from_json(ss.str());
}

std::uint64_t instance_hash(const GameInstance& inst) {
  std::string canon = instance_to_json(inst);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace tsg
