#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "tsg/environment.hpp"
#include "tsg/game.hpp"
#include "tsg/nets.hpp"
#include "tsg/polytope.hpp"
#include "tsg/replay.hpp"
#include "tsg/rng.hpp"

namespace tsg {

struct TrainConfig {
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  int batch_size = 64;
  int buffer_capacity = 100000;
  double soft_update = 1e-3;      // target <- (1-rho) target + rho online
  double noise_scale = 0.3;       // logit-space exploration, linear decay
  double noise_scale_final = 0.05;
  int warmup_steps = 1000;        // environment steps before updates begin
  int total_steps = 10000;
  int eval_every = 1000;          // curve row + greedy evaluation cadence
  int eval_traces = 3;
  std::vector<int> hidden = {64, 64};
  bool scale_rewards = true;      // divide rewards by expected passenger count
  bool select_best_eval = true;   // return the snapshot with best eval delay
  double grad_clip = 10.0;
  EnvConfig env;
  std::uint64_t seed = 1;
};

struct CurveRow {
  long step = 0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double eval_avg_delay = 0.0;
};

struct TrainingCurve {
  std::vector<CurveRow> rows;
};

// Online Eq-style risk audit: every observed action is checked against
//   P_theta [z_m u_plus + (1 - z_m) u_minus] >= -psi_theta   for all m,
// recomputed directly from instance data (independently of the polytope
// rows). Tracks the worst violation and the realized per-risk-level utility
// floor; levels never observed contribute zero to the realized bound.
class RiskAuditAccumulator {
 public:
  explicit RiskAuditAccumulator(const GameInstance& inst);
  void observe(int category, const Eigen::VectorXd& pi);

  double max_violation() const { return max_violation_; }
  long steps() const { return steps_; }
  // sum over observed levels of P_theta * realized floor_theta
  double realized_bound() const;
  const std::vector<double>& realized_u_theta() const { return u_min_; }

 private:
  const GameInstance* inst_;
  double max_violation_ = 0.0;
  std::vector<double> u_min_;  // +inf until a level is observed
  long steps_ = 0;
};

struct AuditSummary {
  double max_violation = 0.0;
  double realized_bound = 0.0;
  std::vector<double> realized_u_theta;
  long steps = 0;
};

AuditSummary summarize(const RiskAuditAccumulator& acc);

// A screening policy: mixture over teams for the current state. Outputs are
// always feasible for the category's polytope.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Eigen::VectorXd act(const Eigen::VectorXd& encoding,
                              int category) const = 0;
};

// Fixed per-category mixtures (the one-shot baseline). Mixtures are
// normalized and alpha-projected once at construction so replay stays within
// audit tolerance even when they come from an external solver.
class StaticPolicy : public Policy {
 public:
  StaticPolicy(std::vector<Eigen::VectorXd> mixtures,
               const std::vector<Polytope>& polys);
  Eigen::VectorXd act(const Eigen::VectorXd&, int category) const override;
  const std::vector<Eigen::VectorXd>& mixtures() const { return mixtures_; }

 private:
  std::vector<Eigen::VectorXd> mixtures_;
};

// Greedy actor: encoding -> dense net -> softmax -> alpha projection.
class ActorPolicy : public Policy {
 public:
  ActorPolicy() = default;
  ActorPolicy(DenseNet net, std::shared_ptr<const std::vector<Polytope>> polys,
              std::uint64_t structure_hash, std::vector<double> psi);
  Eigen::VectorXd act(const Eigen::VectorXd& encoding,
                      int category) const override;

  const DenseNet& net() const { return net_; }
  std::uint64_t structure_hash() const { return structure_hash_; }
  const std::vector<double>& risk_thresholds() const { return psi_; }
  const std::vector<Polytope>& polytopes() const { return *polys_; }

 private:
  DenseNet net_;
  std::shared_ptr<const std::vector<Polytope>> polys_;
  std::uint64_t structure_hash_ = 0;
  std::vector<double> psi_;
};

// Deterministic-policy-gradient learner with target networks and a replay
// buffer. The critic consumes the post-projection action; the actor gradient
// flows through the critic, the projection, and the softmax.
class Ddpg {
 public:
  Ddpg(int encoding_dim, int num_teams,
       std::shared_ptr<const std::vector<Polytope>> polys,
       const TrainConfig& cfg, Rng& init_rng);

  Eigen::VectorXd act_greedy(const Eigen::VectorXd& enc, int category) const;
  Eigen::VectorXd act_noisy(const Eigen::VectorXd& enc, int category,
                            double noise_scale, Rng& noise_rng) const;

  struct UpdateStats {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
  };
  // One gradient step on a uniformly sampled batch; throws NumericsError if a
  // loss turns non-finite.
  UpdateStats update(const ReplayBuffer& buf, Rng& sample_rng);

  const DenseNet& actor() const { return actor_; }
  DenseNet& actor_mut() { return actor_; }
  const DenseNet& critic() const { return critic_; }

 private:
  std::shared_ptr<const std::vector<Polytope>> polys_;
  TrainConfig cfg_;
  DenseNet actor_, critic_, actor_target_, critic_target_;
  Adam actor_opt_, critic_opt_;
};

struct TrainResult {
  ActorPolicy policy;
  TrainingCurve curve;
  AuditSummary audit;
  double update_loop_seconds = 0.0;  // wall time of the step/update loop
};

// Full training run on one instance. All randomness derives from cfg.seed
// through named sub-streams (trace, episode, init, noise, replay, eval).
// The returned policy is the greedy actor; with select_best_eval it carries
// the parameters of the best evaluation snapshot. Every action executed
// anywhere in the run (exploration and evaluation alike) passes through the
// returned audit.
TrainResult train(const GameInstance& inst, const FlightSchedule& sched,
                  const TrainConfig& cfg);

// Greedy rollout of a policy over one trace; returns the average delay
// (negated episode value). Actions are fed to the audit when given.
double rollout_average_delay(const Policy& policy, Environment& env,
                             const ArrivalTrace& trace,
                             std::uint64_t episode_seed,
                             RiskAuditAccumulator* audit = nullptr);

// Versioned JSON checkpoint: layer sizes, parameters, the risk thresholds the
// policy was trained against, and a hash of the instance structure (thresholds
// excluded, since those live in the checkpoint itself).
void save_checkpoint(const ActorPolicy& policy, const std::string& path);
ActorPolicy load_checkpoint(const std::string& path, const GameInstance& inst);

// Hash of the instance with risk thresholds zeroed; see save_checkpoint.
std::uint64_t instance_structure_hash(const GameInstance& inst);

}  // namespace tsg
