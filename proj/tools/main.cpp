#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsg/environment.hpp"
#include "tsg/errors.hpp"
#include "tsg/game.hpp"
#include "tsg/harness.hpp"
#include "tsg/rl.hpp"
#include "tsg/static_lp.hpp"

namespace {

using namespace tsg;

EnvConfig make_env(const std::string& mode) {
  EnvConfig cfg;
  if (mode == "marginal") {
    cfg.mode = QueueMode::Marginal;
  } else if (mode == "sampled") {
    cfg.mode = QueueMode::Sampled;
  } else {
    throw ConfigError("unknown queue mode: " + mode);
  }
  return cfg;
}

FlightSchedule resolve_schedule(const std::string& path,
                                const GameInstance& inst, int passengers,
                                double sigma) {
  if (!path.empty()) {
    FlightSchedule sched = load_schedule(path);
    if (static_cast<int>(sched.flights.size()) != inst.num_flights()) {
      throw ConfigError("schedule flight count does not match the instance");
    }
    return sched;
  }
  return schedule_from_departures(inst.flights, passengers, sigma);
}

// Thresholds for training: either the instance's own (optionally scaled) or
// matched thresholds derived from a saved static plan.
GameInstance resolve_risk(const GameInstance& inst, const std::string& from,
                          double scale, double relax) {
  std::vector<double> psi;
  if (from.empty()) {
    psi = inst.risk_thresholds;
    for (double& p : psi) p *= scale;
  } else {
    StaticSolution sol = load_static_solution(from, inst);
    psi = sol.psi_star;
    for (double& p : psi) p *= scale * (1.0 + relax);
  }
  return with_thresholds(inst, psi);
}

int run_gen_instance(std::uint64_t seed, const std::string& out,
                     InstanceConfig icfg, std::vector<double> departures,
                     const std::string& schedule_out, int passengers,
                     double sigma) {
  if (!departures.empty()) {
    icfg.flights = static_cast<int>(departures.size());
  }
  GameInstance inst = sample_instance(icfg, seed);
  if (!departures.empty()) inst.flights = departures;
  ValidationReport report = validate_instance(inst);
  if (!report.ok()) {
    throw ConfigError("generated instance failed validation: " +
                      report.issues.front());
  }
  save_instance(inst, out);
  if (!schedule_out.empty()) {
    save_schedule(schedule_from_departures(inst.flights, passengers, sigma),
                  schedule_out);
  }
  return 0;
}

int run_solve_lp(const std::string& instance_path,
                 const std::string& schedule_path, const std::string& out,
                 double window, int passengers, double sigma,
                 const std::string& chebyshev_csv, double relax) {
  GameInstance inst = load_instance(instance_path);
  FlightSchedule sched = resolve_schedule(schedule_path, inst, passengers,
                                          sigma);
  StaticSolution sol =
      solve_static_lp(inst, expected_category_counts(inst, sched), window);
  std::string text = static_solution_to_json(sol, inst);
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out);
    if (!f) throw ConfigError("cannot write " + out);
    f << text;
  }
  if (!chebyshev_csv.empty()) {
    GameInstance matched = with_thresholds(
        inst, operative_thresholds(sol.psi_star, relax));
    write_chebyshev_csv(matched, chebyshev_csv);
  }
  return 0;
}

int run_train(const std::string& instance_path,
              const std::string& schedule_path, const std::string& out_dir,
              TrainConfig tcfg, const std::string& risk_from,
              double risk_scale, double relax, int passengers, double sigma) {
  GameInstance inst = load_instance(instance_path);
  GameInstance rl_inst = resolve_risk(inst, risk_from, risk_scale, relax);
  FlightSchedule sched = resolve_schedule(schedule_path, rl_inst, passengers,
                                          sigma);
  TrainResult res = train(rl_inst, sched, tcfg);
  save_checkpoint(res.policy, out_dir + "/checkpoint.json");
  write_curve_csv(res.curve, out_dir + "/curve.csv");

  nlohmann::json j;
  j["max_violation"] = res.audit.max_violation;
  j["realized_bound"] = res.audit.realized_bound;
  j["audited_steps"] = res.audit.steps;
  j["update_loop_seconds"] = res.update_loop_seconds;
  std::cout << j.dump(2) << "\n";
  if (res.audit.max_violation > 1e-9) {
    throw InfeasibleActionAudit("training audit found a violation of " +
                                std::to_string(res.audit.max_violation));
  }
  return 0;
}

int run_evaluate(const std::string& instance_path,
                 const std::string& schedule_path,
                 const std::string& checkpoint, bool suite, SuiteConfig scfg,
                 int traces, std::uint64_t seed, const std::string& out_dir,
                 const std::string& mode, double window, int passengers,
                 double sigma) {
  if (suite) {
    scfg.traces = traces;
    scfg.seed = seed;
    scfg.train.env = make_env(mode);
    scfg.passengers = passengers;
    scfg.sigma_min = sigma;
    scfg.window_min = window;
    EvalReport report = run_evaluation_suite(scfg);
    write_eval_csv(report, out_dir + "/eval.csv");
    return 0;
  }
  if (checkpoint.empty()) {
    throw ConfigError(
        "evaluate needs --checkpoint CHECKPOINT (or --suite); see --help");
  }
  GameInstance inst = load_instance(instance_path);
  ActorPolicy policy = load_checkpoint(checkpoint, inst);
  GameInstance rl_inst = with_thresholds(inst, policy.risk_thresholds());
  FlightSchedule sched = resolve_schedule(schedule_path, rl_inst, passengers,
                                          sigma);
  StaticSolution sol = solve_static_lp(
      inst, expected_category_counts(inst, sched), window);
  StaticPolicy lp_policy(sol.pi, policy.polytopes());
  EvalReport report;
  report.rows.push_back(evaluate_pair(lp_policy, policy, rl_inst, sched,
                                      traces, seed, make_env(mode),
                                      "instance", seed));
  write_eval_csv(report, out_dir + "/eval.csv");
  return 0;
}

int run_pareto(const std::string& instance_path,
               const std::string& schedule_path, ParetoConfig pcfg,
               const std::string& out_dir, bool have_weight, double weight,
               int passengers, double sigma) {
  GameInstance inst = load_instance(instance_path);
  FlightSchedule sched = resolve_schedule(schedule_path, inst, passengers,
                                          sigma);
  pcfg.checkpoint_dir = out_dir;
  std::vector<FrontierPoint> frontier = pareto_sweep(inst, sched, pcfg);
  write_frontier_csv(frontier, out_dir + "/frontier.csv");
  if (have_weight) {
    FrontierPoint pick = select_weighted(frontier, weight);
    nlohmann::json j;
    j["psi_scale"] = pick.psi_scale;
    j["risk_bound"] = pick.risk_bound;
    j["v_o"] = pick.v_o;
    j["checkpoint"] = pick.checkpoint;
    std::cout << j.dump(2) << "\n";
  }
  return 0;
}

int run_sweep_variance(const std::string& instance_path,
                       const std::string& schedule_path, VarianceConfig vcfg,
                       const std::string& out_dir, int passengers,
                       double sigma) {
  GameInstance inst = load_instance(instance_path);
  FlightSchedule sched = resolve_schedule(schedule_path, inst, passengers,
                                          sigma);
  std::vector<VariancePoint> points = sweep_variance(inst, sched, vcfg);
  write_variance_csv(points, out_dir + "/variance.csv");
  return 0;
}

int run_sweep_flights(FlightsConfig fcfg, const std::string& out_dir) {
  std::vector<FlightsPoint> points = sweep_flights(fcfg);
  write_flights_csv(points, out_dir + "/flights.csv");
  return 0;
}

int run_audit(const std::string& instance_path, const std::string& log_path) {
  GameInstance inst = load_instance(instance_path);
  AuditSummary summary = audit_risk(load_action_log(log_path), inst);
  nlohmann::json j;
  j["max_violation"] = summary.max_violation;
  j["realized_bound"] = summary.realized_bound;
  j["audited_steps"] = summary.steps;
  j["realized_u_theta"] = summary.realized_u_theta;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-constrained online threat screening"};
  app.require_subcommand(1);

  std::string instance_path, schedule_path, out_dir = ".", out_file;
  std::string checkpoint, mode = "marginal", risk_from, log_path;
  std::string schedule_out, chebyshev_csv;
  std::uint64_t seed = 1;
  int traces = 20, passengers = 30;
  double sigma = 45.0, window = 1440.0, risk_scale = 1.0, relax = 1e-6;
  std::vector<double> departures, scales = {1.0, 1.5, 2.0, 3.0, 5.0};
  std::vector<double> grid = {30.0, 60.0, 180.0, 300.0};
  std::vector<int> flight_grid = {5, 10, 20};
  bool suite = false, full = false;
  double weight = 0.0;
  InstanceConfig icfg;
  TrainConfig tcfg;
  SuiteConfig scfg;
  FlightsConfig fcfg;

  auto add_instance_family = [&](CLI::App* sub) {
    sub->add_option("--methods", icfg.methods, "Attack methods");
    sub->add_option("--risk-levels", icfg.risk_levels, "Risk levels");
    sub->add_option("--resources", icfg.resources, "Screening resources");
    sub->add_option("--teams", icfg.teams, "Screening teams");
    sub->add_option("--flights", icfg.flights, "Flights");
    sub->add_option("--team-size", icfg.team_size, "Resources per team");
  };

  CLI::App* gen = app.add_subcommand("gen-instance",
                                     "Sample a screening game instance");
  gen->add_option("--seed", seed, "Master seed");
  gen->add_option("--out", out_file, "Instance JSON path")->required();
  add_instance_family(gen);
  gen->add_option("--departures", departures,
                  "Flight departure minutes (overrides sampled ones)")
      ->delimiter(',');
  gen->add_option("--schedule-out", schedule_out,
                  "Also write a schedule CSV for the departures");
  gen->add_option("--passengers", passengers, "Passengers per flight");
  gen->add_option("--sigma", sigma, "Arrival sigma, minutes");
  gen->callback([&] {
    run_gen_instance(seed, out_file, icfg, departures, schedule_out,
                     passengers, sigma);
  });

  CLI::App* lp = app.add_subcommand("solve-lp",
                                    "Solve the one-shot maximin plan");
  lp->add_option("--instance", instance_path, "Instance JSON")->required();
  lp->add_option("--schedule", schedule_path, "Schedule CSV");
  lp->add_option("--out", out_file, "Plan JSON path (default stdout)");
  lp->add_option("--window", window, "Screening window, minutes");
  lp->add_option("--passengers", passengers, "Passengers per flight");
  lp->add_option("--sigma", sigma, "Arrival sigma, minutes");
  lp->add_option("--chebyshev-csv", chebyshev_csv,
                 "Write anchor centers of the matched-threshold polytopes");
  lp->add_option("--risk-relax", relax, "Matched-threshold relaxation");
  lp->callback([&] {
    run_solve_lp(instance_path, schedule_path, out_file, window, passengers,
                 sigma, chebyshev_csv, relax);
  });

  CLI::App* tr = app.add_subcommand("train", "Train the online policy");
  tr->add_option("--instance", instance_path, "Instance JSON")->required();
  tr->add_option("--schedule", schedule_path, "Schedule CSV");
  tr->add_option("--out", out_dir, "Output directory");
  tr->add_option("--seed", tcfg.seed, "Master seed");
  tr->add_option("--steps", tcfg.total_steps, "Environment steps");
  tr->add_option("--eval-every", tcfg.eval_every, "Curve row cadence");
  tr->add_option("--traces", tcfg.eval_traces, "Evaluation traces");
  tr->add_option("--warmup", tcfg.warmup_steps, "Steps before updates");
  tr->add_option("--actor-lr", tcfg.actor_lr, "Actor learning rate");
  tr->add_option("--critic-lr", tcfg.critic_lr, "Critic learning rate");
  tr->add_option("--soft-update", tcfg.soft_update, "Target update rate");
  tr->add_option("--noise", tcfg.noise_scale, "Initial logit noise");
  tr->add_option("--noise-final", tcfg.noise_scale_final, "Final logit noise");
  tr->add_option("--batch", tcfg.batch_size, "Update batch size");
  tr->add_option("--mode", mode, "Queue mode: marginal|sampled");
  tr->add_option("--risk-from", risk_from, "Static plan JSON for thresholds");
  tr->add_option("--risk-scale", risk_scale, "Threshold scale factor");
  tr->add_option("--risk-relax", relax, "Matched-threshold relaxation");
  tr->add_option("--passengers", passengers, "Passengers per flight");
  tr->add_option("--sigma", sigma, "Arrival sigma, minutes");
  tr->callback([&] {
    tcfg.env = make_env(mode);
    run_train(instance_path, schedule_path, out_dir, tcfg, risk_from,
              risk_scale, relax, passengers, sigma);
  });

  CLI::App* ev = app.add_subcommand("evaluate",
                                    "Compare static and online policies");
  ev->add_option("--instance", instance_path, "Instance JSON");
  ev->add_option("--schedule", schedule_path, "Schedule CSV");
  ev->add_option("--checkpoint", checkpoint, "Trained policy checkpoint");
  ev->add_flag("--suite", suite, "Sample instances and train per instance");
  ev->add_option("--instances", scfg.instances, "Suite instance count");
  ev->add_option("--steps", scfg.train.total_steps, "Suite training steps");
  ev->add_option("--flights", scfg.instance.flights, "Suite flight count");
  ev->add_option("--actor-lr", scfg.train.actor_lr, "Actor learning rate");
  ev->add_option("--critic-lr", scfg.train.critic_lr, "Critic learning rate");
  ev->add_option("--soft-update", scfg.train.soft_update,
                 "Target update rate");
  ev->add_option("--noise", scfg.train.noise_scale, "Initial logit noise");
  ev->add_option("--noise-final", scfg.train.noise_scale_final,
                 "Final logit noise");
  ev->add_flag("--full", full, "Suite at 30 instances x 100 traces");
  ev->add_option("--traces", traces, "Evaluation traces");
  ev->add_option("--seed", seed, "Master seed");
  ev->add_option("--out", out_dir, "Output directory");
  ev->add_option("--mode", mode, "Queue mode: marginal|sampled");
  ev->add_option("--window", window, "Screening window, minutes");
  ev->add_option("--passengers", passengers, "Passengers per flight");
  CLI::Option* ev_sigma =
      ev->add_option("--sigma", sigma, "Arrival sigma, minutes");
  ev->callback([&] {
    if (suite && full) {
      scfg.instances = 30;
      traces = 100;
    }
    // The suite defaults to bursty arrivals (2 sigma = 1 h) unless told
    // otherwise; single-checkpoint evaluation keeps the schedule default.
    double eff_sigma = sigma;
    if (suite && ev_sigma->count() == 0) eff_sigma = 30.0;
    if (!suite && instance_path.empty()) {
      throw ConfigError("evaluate needs --instance (or --suite); see --help");
    }
    run_evaluate(instance_path, schedule_path, checkpoint, suite, scfg,
                 traces, seed, out_dir, mode, window, passengers, eff_sigma);
  });

  CLI::App* pa = app.add_subcommand("pareto",
                                    "Delay/risk frontier over threshold scales");
  ParetoConfig pcfg;
  bool have_weight = false;
  pa->add_option("--instance", instance_path, "Instance JSON")->required();
  pa->add_option("--schedule", schedule_path, "Schedule CSV");
  pa->add_option("--scales", pcfg.scales, "Threshold scale grid")
      ->delimiter(',');
  pa->add_option("--traces", pcfg.traces, "Evaluation traces");
  pa->add_option("--steps", pcfg.train.total_steps, "Training steps");
  pa->add_option("--seed", pcfg.seed, "Master seed");
  pa->add_option("--out", out_dir, "Output directory");
  pa->add_option("--window", pcfg.window_min, "Screening window, minutes");
  CLI::Option* pa_weight =
      pa->add_option("--weight", weight, "Select bound + weight * V_o");
  pa->add_option("--mode", mode, "Queue mode: marginal|sampled");
  pa->add_option("--passengers", passengers, "Passengers per flight");
  pa->add_option("--sigma", sigma, "Arrival sigma, minutes");
  pa->callback([&] {
    pcfg.train.env = make_env(mode);
    have_weight = pa_weight->count() > 0;
    run_pareto(instance_path, schedule_path, pcfg, out_dir, have_weight,
               weight, passengers, sigma);
  });

  CLI::App* sv = app.add_subcommand("sweep-variance",
                                    "Delay ratio across arrival spreads");
  VarianceConfig vcfg;
  sv->add_option("--instance", instance_path, "Instance JSON")->required();
  sv->add_option("--schedule", schedule_path, "Schedule CSV");
  sv->add_option("--grid", vcfg.two_sigma_min, "Two-sigma grid, minutes")
      ->delimiter(',');
  sv->add_option("--traces", vcfg.traces, "Evaluation traces");
  sv->add_option("--reps", vcfg.reps, "Training runs per grid point");
  sv->add_option("--steps", vcfg.train.total_steps, "Training steps");
  sv->add_option("--seed", vcfg.seed, "Master seed");
  sv->add_option("--out", out_dir, "Output directory");
  sv->add_option("--window", vcfg.window_min, "Screening window, minutes");
  sv->add_option("--mode", mode, "Queue mode: marginal|sampled");
  sv->add_option("--passengers", passengers, "Passengers per flight");
  sv->add_option("--sigma", sigma, "Arrival sigma, minutes");
  sv->callback([&] {
    vcfg.train.env = make_env(mode);
    run_sweep_variance(instance_path, schedule_path, vcfg, out_dir,
                       passengers, sigma);
  });

  CLI::App* sf = app.add_subcommand("sweep-flights",
                                    "Convergence and wall time across sizes");
  sf->add_option("--flights", fcfg.flight_counts, "Flight-count grid")
      ->delimiter(',');
  sf->add_option("--steps", fcfg.train.total_steps, "Training steps");
  sf->add_option("--seed", fcfg.seed, "Master seed");
  sf->add_option("--out", out_dir, "Output directory");
  sf->add_option("--mode", mode, "Queue mode: marginal|sampled");
  sf->add_option("--passengers", fcfg.passengers, "Passengers per flight");
  sf->add_option("--sigma", fcfg.sigma_min, "Arrival sigma, minutes");
  sf->callback([&] {
    fcfg.train.env = make_env(mode);
    run_sweep_flights(fcfg, out_dir);
  });

  CLI::App* au = app.add_subcommand("audit",
                                    "Recompute risk rows over an action log");
  au->add_option("--instance", instance_path, "Instance JSON")->required();
  au->add_option("--log", log_path, "Action log JSON")->required();
  au->callback([&] { run_audit(instance_path, log_path); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    std::cerr << "run with --help for usage\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InfeasibleRisk& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
