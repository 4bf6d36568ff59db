#include "tsg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "tsg/errors.hpp"

namespace tsg {

using nlohmann::json;

std::vector<double> operative_thresholds(const std::vector<double>& psi_star,
                                         double relax) {
  std::vector<double> out(psi_star.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = psi_star[i] * (1.0 + relax);
  }
  return out;
}

GameInstance with_thresholds(const GameInstance& inst,
                             const std::vector<double>& psi) {
  if (psi.size() != inst.risk_thresholds.size()) {
    throw ConfigError("threshold count does not match the instance");
  }
  GameInstance out = inst;
  out.risk_thresholds = psi;
  return out;
}

EvalRow evaluate_pair(const Policy& static_policy, const Policy& online_policy,
                      const GameInstance& inst, const FlightSchedule& sched,
                      int traces, std::uint64_t seed, const EnvConfig& env_cfg,
                      const std::string& instance_id,
                      std::uint64_t instance_seed) {
  if (traces <= 0) throw ConfigError("need at least one evaluation trace");
  std::vector<Polytope> polys = build_all_polytopes(inst);
  Environment env_static(inst, polys, sched, env_cfg);
  Environment env_online(inst, polys, sched, env_cfg);
  RiskAuditAccumulator audit_static(inst), audit_online(inst);

  double sum_static = 0.0, sum_online = 0.0;
  for (int i = 0; i < traces; ++i) {
    ArrivalTrace trace = sample_arrivals(
        sched, inst.risk_levels, substream(seed, "trace", i),
        inst.num_flights());
    const std::uint64_t episode_seed = substream(seed, "episode", i);
    sum_static += rollout_average_delay(static_policy, env_static, trace,
                                        episode_seed, &audit_static);
    sum_online += rollout_average_delay(online_policy, env_online, trace,
                                        episode_seed, &audit_online);
  }

  EvalRow row;
  row.instance_id = instance_id;
  row.seed = instance_seed;
  row.avg_delay_lp = sum_static / traces;
  row.avg_delay_rl = sum_online / traces;
  row.delay_ratio = row.avg_delay_lp / std::max(row.avg_delay_rl, 1e-12);
  double psi_sum = 0.0;
  for (double p : inst.risk_thresholds) psi_sum += p;
  row.risk_bound = -psi_sum;
  row.realized_risk = audit_online.realized_bound();
  row.max_violation =
      std::max(audit_static.max_violation(), audit_online.max_violation());
  row.traces = traces;
  if (row.max_violation > 1e-9) {
    throw InfeasibleActionAudit(
        "policy comparison produced a risk violation of " +
        std::to_string(row.max_violation) + " on instance " + instance_id);
  }
  return row;
}

EvalReport run_evaluation_suite(const SuiteConfig& cfg) {
  if (cfg.instances <= 0) throw ConfigError("need at least one instance");
  if (cfg.traces <= 0) throw ConfigError("need at least one trace");

  EvalReport report;
  double sum_lp = 0.0, sum_rl = 0.0, sum_ratio = 0.0;
  double sum_bound = 0.0, sum_real = 0.0, worst_violation = 0.0;
  long total_traces = 0;

  int accepted = 0;
  const long max_draws = 10L * cfg.instances + 10;
  for (long draw = 0; accepted < cfg.instances; ++draw) {
    if (draw >= max_draws) {
      throw NumericsError("too many infeasible instance draws in a row");
    }
    const std::uint64_t inst_seed = substream(cfg.seed, "instance", draw);
    GameInstance inst = sample_instance(cfg.instance, inst_seed);
    FlightSchedule sched = schedule_from_departures(inst.flights,
                                                    cfg.passengers,
                                                    cfg.sigma_min);
    try {
      StaticSolution sol = solve_static_lp(
          inst, expected_category_counts(inst, sched), cfg.window_min);
      GameInstance rl_inst = with_thresholds(
          inst, operative_thresholds(sol.psi_star, cfg.psi_relax));

      TrainConfig tcfg = cfg.train;
      tcfg.seed = substream(cfg.seed, "train", draw);
      TrainResult trained = train(rl_inst, sched, tcfg);
      if (trained.audit.max_violation > 1e-9) {
        throw InfeasibleActionAudit(
            "training run produced a risk violation of " +
            std::to_string(trained.audit.max_violation));
      }

      StaticPolicy lp_policy(sol.pi, trained.policy.polytopes());
      EvalRow row = evaluate_pair(
          lp_policy, trained.policy, rl_inst, sched, cfg.traces,
          substream(cfg.seed, "eval", draw), cfg.train.env,
          "inst-" + std::to_string(accepted), inst_seed);
      sum_lp += row.avg_delay_lp;
      sum_rl += row.avg_delay_rl;
      sum_ratio += row.delay_ratio;
      sum_bound += row.risk_bound;
      sum_real += row.realized_risk;
      worst_violation = std::max(worst_violation, row.max_violation);
      total_traces += row.traces;
      report.rows.push_back(std::move(row));
      ++accepted;
    } catch (const InfeasibleRisk& e) {
      std::cerr << "skipping instance draw " << draw << ": " << e.what()
                << "\n";
    }
  }

  EvalRow summary;
  summary.instance_id = "summary";
  summary.seed = cfg.seed;
  summary.avg_delay_lp = sum_lp / cfg.instances;
  summary.avg_delay_rl = sum_rl / cfg.instances;
  summary.delay_ratio = sum_ratio / cfg.instances;
  summary.risk_bound = sum_bound / cfg.instances;
  summary.realized_risk = sum_real / cfg.instances;
  summary.max_violation = worst_violation;
  summary.traces = total_traces;
  report.rows.push_back(std::move(summary));
  return report;
}

AuditSummary audit_risk(const std::vector<LoggedAction>& log,
                        const GameInstance& inst) {
  RiskAuditAccumulator acc(inst);
  for (const LoggedAction& entry : log) {
    if (entry.category < 0 || entry.category >= inst.num_categories()) {
      throw ConfigError("logged category out of range");
    }
    if (entry.pi.size() != inst.num_teams()) {
      throw ConfigError("logged action has the wrong team count");
    }
    acc.observe(entry.category, entry.pi);
  }
  return summarize(acc);
}

std::vector<LoggedAction> load_action_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    json j = json::parse(ss.str());
    std::vector<LoggedAction> log;
    for (const json& item : j) {
      LoggedAction a;
      a.category = item.at("category").get<int>();
      const json& pi = item.at("pi");
      a.pi.resize(static_cast<Eigen::Index>(pi.size()));
      for (std::size_t t = 0; t < pi.size(); ++t) {
        a.pi(static_cast<Eigen::Index>(t)) = pi.at(t).get<double>();
      }
      log.push_back(std::move(a));
    }
    return log;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("action log: ") + e.what());
  }
}

void save_action_log(const std::vector<LoggedAction>& log,
                     const std::string& path) {
  json j = json::array();
  for (const LoggedAction& a : log) {
    json item;
    item["category"] = a.category;
    json pi = json::array();
    for (Eigen::Index t = 0; t < a.pi.size(); ++t) pi.push_back(a.pi(t));
    item["pi"] = std::move(pi);
    j.push_back(std::move(item));
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << "\n";
}

std::vector<FrontierPoint> pareto_sweep(const GameInstance& inst,
                                        const FlightSchedule& sched,
                                        const ParetoConfig& cfg) {
  if (cfg.scales.empty()) throw ConfigError("need at least one scale");
  for (double g : cfg.scales) {
    if (!(g > 0.0)) throw ConfigError("scales must be positive");
  }
  if (cfg.traces <= 0) throw ConfigError("need at least one trace");

  std::vector<double> scales = cfg.scales;
  std::sort(scales.begin(), scales.end());

  StaticSolution sol = solve_static_lp(
      inst, expected_category_counts(inst, sched), cfg.window_min);

  std::vector<ArrivalTrace> traces;
  for (int i = 0; i < cfg.traces; ++i) {
    traces.push_back(sample_arrivals(sched, inst.risk_levels,
                                     substream(cfg.seed, "trace", i),
                                     inst.num_flights()));
  }

  std::vector<FrontierPoint> frontier;
  for (std::size_t idx = 0; idx < scales.size(); ++idx) {
    const double g = scales[idx];
    std::vector<double> psi = sol.psi_star;
    for (double& p : psi) p *= g * (1.0 + cfg.psi_relax);
    GameInstance rl_inst = with_thresholds(inst, psi);
    try {
      TrainConfig tcfg = cfg.train;
      tcfg.seed = substream(cfg.seed, "train", idx);
      TrainResult trained = train(rl_inst, sched, tcfg);
      if (trained.audit.max_violation > 1e-9) {
        throw InfeasibleActionAudit(
            "training run produced a risk violation of " +
            std::to_string(trained.audit.max_violation));
      }
      Environment env(rl_inst, trained.policy.polytopes(), sched,
                      cfg.train.env);
      RiskAuditAccumulator acc(rl_inst);
      double sum = 0.0;
      for (int i = 0; i < cfg.traces; ++i) {
        sum += rollout_average_delay(trained.policy, env, traces[i],
                                     substream(cfg.seed, "episode", i), &acc);
      }
      if (acc.max_violation() > 1e-9) {
        throw InfeasibleActionAudit(
            "frontier evaluation produced a risk violation of " +
            std::to_string(acc.max_violation()));
      }
      FrontierPoint point;
      point.psi_scale = g;
      point.psi = psi;
      double psi_sum = 0.0;
      for (double p : psi) psi_sum += p;
      point.risk_bound = -psi_sum;
      point.v_o = -(sum / cfg.traces);
      if (!cfg.checkpoint_dir.empty()) {
        point.checkpoint = cfg.checkpoint_dir + "/policy_scale_" +
                           format_double(g) + ".json";
        save_checkpoint(trained.policy, point.checkpoint);
      }
      frontier.push_back(std::move(point));
    } catch (const InfeasibleRisk& e) {
      std::cerr << "skipping scale " << format_double(g) << ": " << e.what()
                << "\n";
    }
  }
  return frontier;
}

FrontierPoint select_weighted(const std::vector<FrontierPoint>& frontier,
                              double w) {
  if (frontier.empty()) throw ConfigError("empty frontier");
  if (!(w >= 0.0)) throw ConfigError("weight must be >= 0");
  const FrontierPoint* best = &frontier.front();
  auto psi_sum = [](const FrontierPoint& p) { return -p.risk_bound; };
  double best_score = best->risk_bound + w * best->v_o;
  for (const FrontierPoint& p : frontier) {
    const double score = p.risk_bound + w * p.v_o;
    if (score > best_score ||
        (score == best_score && psi_sum(p) < psi_sum(*best))) {
      best = &p;
      best_score = score;
    }
  }
  return *best;
}

std::vector<VariancePoint> sweep_variance(const GameInstance& inst,
                                          const FlightSchedule& base,
                                          const VarianceConfig& cfg) {
  if (cfg.two_sigma_min.empty()) throw ConfigError("need a two-sigma grid");
  for (double s : cfg.two_sigma_min) {
    if (!(s > 0.0)) throw ConfigError("two-sigma values must be positive");
  }
  std::vector<double> grid = cfg.two_sigma_min;
  std::sort(grid.begin(), grid.end());

  StaticSolution sol = solve_static_lp(
      inst, expected_category_counts(inst, base), cfg.window_min);
  GameInstance rl_inst = with_thresholds(
      inst, operative_thresholds(sol.psi_star, cfg.psi_relax));

  if (cfg.reps < 1) throw ConfigError("reps must be at least 1");

  std::vector<VariancePoint> points;
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    FlightSchedule sched = base;
    for (Flight& f : sched.flights) f.sigma_min = grid[idx] / 2.0;

    double lp_sum = 0.0, rl_sum = 0.0;
    for (int rep = 0; rep < cfg.reps; ++rep) {
      TrainConfig tcfg = cfg.train;
      tcfg.seed = substream(cfg.seed, "train",
                            idx * static_cast<std::uint64_t>(cfg.reps) + rep);
      TrainResult trained = train(rl_inst, sched, tcfg);
      if (trained.audit.max_violation > 1e-9) {
        throw InfeasibleActionAudit(
            "training run produced a risk violation of " +
            std::to_string(trained.audit.max_violation));
      }
      StaticPolicy lp_policy(sol.pi, trained.policy.polytopes());
      EvalRow row = evaluate_pair(lp_policy, trained.policy, rl_inst, sched,
                                  cfg.traces, substream(cfg.seed, "eval", idx),
                                  cfg.train.env, "two-sigma-" +
                                  format_double(grid[idx]), cfg.seed);
      lp_sum += row.avg_delay_lp;
      rl_sum += row.avg_delay_rl;
    }
    points.push_back(
        {grid[idx], lp_sum / std::max(rl_sum, 1e-12 * cfg.reps)});
  }
  return points;
}

std::vector<FlightsPoint> sweep_flights(const FlightsConfig& cfg) {
  if (cfg.flight_counts.empty()) throw ConfigError("need a flight-count grid");
  for (int f : cfg.flight_counts) {
    if (f <= 0) throw ConfigError("flight counts must be positive");
  }
  if (cfg.train.total_steps <= 0) {
    throw ConfigError("flight sweep needs a positive step budget");
  }
  std::vector<int> grid = cfg.flight_counts;
  std::sort(grid.begin(), grid.end());

  std::vector<FlightsPoint> points;
  for (int flights : grid) {
    InstanceConfig icfg = cfg.instance;
    icfg.flights = flights;
    GameInstance inst =
        sample_instance(icfg, substream(cfg.seed, "instance", flights));
    FlightSchedule sched = schedule_from_departures(inst.flights,
                                                    cfg.passengers,
                                                    cfg.sigma_min);
    StaticSolution sol = solve_static_lp(
        inst, expected_category_counts(inst, sched), cfg.window_min);
    GameInstance rl_inst = with_thresholds(
        inst, operative_thresholds(sol.psi_star, cfg.psi_relax));

    TrainConfig tcfg = cfg.train;
    tcfg.seed = substream(cfg.seed, "train", flights);
    TrainResult trained = train(rl_inst, sched, tcfg);
    if (trained.audit.max_violation > 1e-9) {
      throw InfeasibleActionAudit(
          "training run produced a risk violation of " +
          std::to_string(trained.audit.max_violation));
    }
    FlightsPoint point;
    point.flights = flights;
    point.steps = convergence_step(trained.curve);
    point.secs =
        trained.update_loop_seconds * (10000.0 / cfg.train.total_steps);
    points.push_back(point);
  }
  return points;
}

long convergence_step(const TrainingCurve& curve) {
  const auto& rows = curve.rows;
  if (rows.empty()) throw ConfigError("empty training curve");
  const int n = static_cast<int>(rows.size());
  const int tail = std::max(1, n / 10);
  double plateau = 0.0;
  for (int i = n - tail; i < n; ++i) plateau += rows[i].actor_loss;
  plateau /= tail;
  const double band = 0.05 * std::max(std::abs(plateau), 1e-6);

  auto smoothed = [&rows](int i) {
    const int lo = std::max(0, i - 4);
    double sum = 0.0;
    for (int j = lo; j <= i; ++j) sum += rows[j].actor_loss;
    return sum / (i - lo + 1);
  };
  for (int i = 0; i < n; ++i) {
    bool settled = true;
    for (int j = i; j < n; ++j) {
      if (std::abs(smoothed(j) - plateau) > band) {
        settled = false;
        break;
      }
    }
    if (settled) return rows[i].step;
  }
  return rows[n - 1].step;
}

std::string format_double(double v) {
  if (!std::isfinite(v)) {
    throw NumericsError("refusing to write a non-finite value");
  }
  char buf[64];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  return out;
}

}  // namespace

void write_eval_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "instance_id,seed,avg_delay_lp,avg_delay_rl,delay_ratio,risk_bound,"
         "realized_risk,max_violation,traces\n";
  for (const EvalRow& r : report.rows) {
    out << r.instance_id << ',' << r.seed << ',' << format_double(r.avg_delay_lp)
        << ',' << format_double(r.avg_delay_rl) << ','
        << format_double(r.delay_ratio) << ',' << format_double(r.risk_bound)
        << ',' << format_double(r.realized_risk) << ','
        << format_double(r.max_violation) << ',' << r.traces << '\n';
  }
}

void write_frontier_csv(const std::vector<FrontierPoint>& frontier,
                        const std::string& path) {
  std::ofstream out = open_out(path);
  out << "psi_scale,risk_bound,v_o\n";
  for (const FrontierPoint& p : frontier) {
    out << format_double(p.psi_scale) << ',' << format_double(p.risk_bound)
        << ',' << format_double(p.v_o) << '\n';
  }
}

void write_variance_csv(const std::vector<VariancePoint>& points,
                        const std::string& path) {
  std::ofstream out = open_out(path);
  out << "two_sigma_min,ratio\n";
  for (const VariancePoint& p : points) {
    out << format_double(p.two_sigma_min) << ',' << format_double(p.ratio)
        << '\n';
  }
}

void write_flights_csv(const std::vector<FlightsPoint>& points,
                       const std::string& path) {
  std::ofstream out = open_out(path);
  out << "flights,steps,secs\n";
  for (const FlightsPoint& p : points) {
    out << p.flights << ',' << p.steps << ',' << format_double(p.secs)
        << '\n';
  }
}

void write_curve_csv(const TrainingCurve& curve, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "step,actor_loss,critic_loss,eval_avg_delay\n";
  for (const CurveRow& r : curve.rows) {
    out << r.step << ',' << format_double(r.actor_loss) << ','
        << format_double(r.critic_loss) << ','
        << format_double(r.eval_avg_delay) << '\n';
  }
}

void write_chebyshev_csv(const GameInstance& inst, const std::string& path) {
  std::ofstream out = open_out(path);
  out << "category_id,radius";
  for (int t = 0; t < inst.num_teams(); ++t) out << ",y0_" << t;
  out << '\n';
  for (int c = 0; c < inst.num_categories(); ++c) {
    Polytope poly = build_polytope(inst, c);
    out << c << ',' << format_double(poly.chebyshev_radius);
    for (Eigen::Index t = 0; t < poly.interior_point.size(); ++t) {
      out << ',' << format_double(poly.interior_point(t));
    }
    out << '\n';
  }
}

}  // namespace tsg
