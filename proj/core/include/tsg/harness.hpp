#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tsg/environment.hpp"
#include "tsg/game.hpp"
#include "tsg/rl.hpp"
#include "tsg/static_lp.hpp"

namespace tsg {

// One policy comparison on common random traces. delay_ratio is static over
// online, so larger means the online policy wins. risk_bound is the bound the
// polytopes enforce (-sum of the instance thresholds); realized_risk is the
// bound recomputed from the online policy's audited actions.
struct EvalRow {
  std::string instance_id;
  std::uint64_t seed = 0;
  double avg_delay_lp = 0.0;
  double avg_delay_rl = 0.0;
  double delay_ratio = 0.0;
  double risk_bound = 0.0;
  double realized_risk = 0.0;
  double max_violation = 0.0;
  long traces = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // per instance, then one summary row
};

// Thresholds actually installed for training: psi_star scaled up by a hair so
// the matched-risk polytopes keep a strict interior.
std::vector<double> operative_thresholds(const std::vector<double>& psi_star,
                                         double relax = 1e-6);
GameInstance with_thresholds(const GameInstance& inst,
                             const std::vector<double>& psi);

// Evaluate two policies on the same arrival traces (common random numbers).
// Both action streams are audited; any violation above 1e-9 throws
// InfeasibleActionAudit. realized_risk reports the online policy's floor.
EvalRow evaluate_pair(const Policy& static_policy, const Policy& online_policy,
                      const GameInstance& inst, const FlightSchedule& sched,
                      int traces, std::uint64_t seed, const EnvConfig& env_cfg,
                      const std::string& instance_id,
                      std::uint64_t instance_seed);

struct SuiteConfig {
  int instances = 5;
  int traces = 20;
  int passengers = 30;
  double sigma_min = 30.0;  // arrival sigma; 2 sigma = 1 h default
  double window_min = 1440.0;
  double psi_relax = 1e-6;
  InstanceConfig instance;
  TrainConfig train;
  std::uint64_t seed = 1;
};

// Full protocol: sample instances, solve the static plan, train a policy at
// matched thresholds, evaluate both on common traces. Instances whose
// matched thresholds leave no interior are skipped (with a note on stderr)
// and replaced by further draws. The last row aggregates: mean delays, mean
// of the per-instance ratios, worst violation, total traces.
EvalReport run_evaluation_suite(const SuiteConfig& cfg);

struct LoggedAction {
  int category = 0;
  Eigen::VectorXd pi;
};

// Recompute every risk row for every logged action.
AuditSummary audit_risk(const std::vector<LoggedAction>& log,
                        const GameInstance& inst);
std::vector<LoggedAction> load_action_log(const std::string& path);
void save_action_log(const std::vector<LoggedAction>& log,
                     const std::string& path);

struct FrontierPoint {
  double psi_scale = 1.0;
  std::vector<double> psi;    // operative thresholds at this point
  double risk_bound = 0.0;    // -sum psi
  double v_o = 0.0;           // minus average delay, minutes
  std::string checkpoint;     // saved policy path, empty if not persisted
};

struct ParetoConfig {
  std::vector<double> scales = {1.0, 1.5, 2.0, 3.0, 5.0};
  int traces = 20;
  double window_min = 1440.0;
  double psi_relax = 1e-6;
  TrainConfig train;
  std::uint64_t seed = 1;
  std::string checkpoint_dir;  // empty: do not persist policies
};

// One trained policy per threshold scale, sorted by scale. Infeasible scales
// are reported on stderr and skipped.
std::vector<FrontierPoint> pareto_sweep(const GameInstance& inst,
                                        const FlightSchedule& sched,
                                        const ParetoConfig& cfg);

// argmax of risk_bound + w * v_o, ties toward smaller sum of thresholds.
FrontierPoint select_weighted(const std::vector<FrontierPoint>& frontier,
                              double w);

struct VarianceConfig {
  std::vector<double> two_sigma_min = {30.0, 60.0, 180.0, 300.0};
  int traces = 20;
  // Independent training runs per grid point; the reported ratio divides the
  // static delay by the mean adaptive delay so one lucky or unlucky training
  // run cannot dominate the trend.
  int reps = 1;
  double window_min = 1440.0;
  double psi_relax = 1e-6;
  TrainConfig train;
  std::uint64_t seed = 1;
};

struct VariancePoint {
  double two_sigma_min = 0.0;
  double ratio = 0.0;
};

// Re-train and re-evaluate with the base schedule's arrival spread replaced
// by each grid value. The static plan is independent of sigma and is solved
// once.
std::vector<VariancePoint> sweep_variance(const GameInstance& inst,
                                          const FlightSchedule& base,
                                          const VarianceConfig& cfg);

struct FlightsConfig {
  std::vector<int> flight_counts = {5, 10, 20};
  int passengers = 30;
  double sigma_min = 45.0;
  double window_min = 1440.0;
  double psi_relax = 1e-6;
  InstanceConfig instance;
  TrainConfig train;  // total_steps > 0 required
  std::uint64_t seed = 1;
};

struct FlightsPoint {
  int flights = 0;
  long steps = 0;   // steps until the actor loss joins its plateau
  double secs = 0;  // wall seconds of the step/update loop, per 10k steps
};

std::vector<FlightsPoint> sweep_flights(const FlightsConfig& cfg);

// First curve step after which the moving-average actor loss (window 5)
// stays within 5% of the plateau, the mean over the last tenth of the rows.
long convergence_step(const TrainingCurve& curve);

// Shortest-round-trip decimal text; CSV cells go through this so identical
// doubles print identically.
std::string format_double(double v);

void write_eval_csv(const EvalReport& report, const std::string& path);
void write_frontier_csv(const std::vector<FrontierPoint>& frontier,
                        const std::string& path);
void write_variance_csv(const std::vector<VariancePoint>& points,
                        const std::string& path);
void write_flights_csv(const std::vector<FlightsPoint>& points,
                       const std::string& path);
void write_curve_csv(const TrainingCurve& curve, const std::string& path);
void write_chebyshev_csv(const GameInstance& inst, const std::string& path);

}  // namespace tsg
