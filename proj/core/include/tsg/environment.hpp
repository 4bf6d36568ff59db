#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tsg/game.hpp"
#include "tsg/polytope.hpp"
#include "tsg/rng.hpp"

namespace tsg {

struct Flight {
  int id = 0;
  double departure_min = 0.0;
  int passengers = 0;
  double sigma_min = 45.0;
};

struct FlightSchedule {
  std::vector<Flight> flights;
  double day_length_min = 1440.0;
};

// CSV with header flight_id,departure_min,passengers,sigma_min. The sigma
// column may be absent or blank; the default (45 min) then applies.
FlightSchedule load_schedule(const std::string& path);
void save_schedule(const FlightSchedule& sched, const std::string& path);
FlightSchedule schedule_from_departures(const std::vector<double>& departures,
                                        int passengers = 30,
                                        double sigma_min = 45.0);

struct Arrival {
  int category = 0;   // <theta, kappa> index
  double time = 0.0;  // minutes
};

// One day of passenger arrivals, sorted by time (ties keep draw order).
struct ArrivalTrace {
  std::vector<Arrival> events;
};

// Per flight, arrival times are Normal(departure - 2 sigma, sigma) truncated
// to [0, departure] by redraw; risk levels are drawn from the prior. With the
// default sigma = 45 the mean sits 90 minutes before departure and about 95%
// of arrivals land within that +-2 sigma window.
ArrivalTrace sample_arrivals(const FlightSchedule& sched,
                             const std::vector<double>& prior,
                             std::uint64_t seed, int num_flights_in_game);

// Fluid drain: each queue empties at its screening rate, never below zero.
Eigen::VectorXd queue_drain(const Eigen::VectorXd& queues, double dt,
                            const Eigen::VectorXd& rates);

// Expected wait of a passenger screened under mixture pi at the current
// queues: sum_t pi_t max_{r in t} queues_r / rates_r.
double expected_wait(const Eigen::VectorXd& queues,
                     const Eigen::VectorXd& rates, const Eigen::VectorXd& pi,
                     const std::vector<std::vector<int>>& teams);

struct ScreeningState {
  int category = 0;
  Eigen::VectorXd queues;      // backlog per resource
  std::vector<int> screened;   // passengers handled so far, per category
  double clock = 0.0;          // minutes
};

enum class QueueMode { Marginal, Sampled };

struct EnvConfig {
  QueueMode mode = QueueMode::Marginal;
  double wait_cap_min = 240.0;  // encoding clip for queue waits
};

// Screening day driven by an arrival trace. Each step screens the passenger
// at the cursor: reward is the negative expected wait at the pre-arrival
// queues, then the queues absorb the new passenger (marginal mass per
// resource, or one sampled team), the category count bumps, and time advances
// to the next arrival with a fluid drain in between. Every action is audited
// against its category polytope at 1e-9 before it is applied.
class Environment {
 public:
  Environment(const GameInstance& inst, const std::vector<Polytope>& polys,
              const FlightSchedule& sched, EnvConfig cfg = {});

  void reset(const ArrivalTrace& trace, std::uint64_t episode_seed = 0);

  struct StepResult {
    double reward = 0.0;
    bool done = true;
  };
  StepResult step(const Eigen::VectorXd& pi);

  bool done() const { return cursor_ >= trace_->events.size(); }
  const ScreeningState& state() const { return state_; }
  Eigen::VectorXd encode() const;
  int encoding_dim() const;
  const GameInstance& instance() const { return *inst_; }
  const std::vector<Polytope>& polytopes() const { return *polys_; }

 private:
  const GameInstance* inst_;
  const std::vector<Polytope>* polys_;
  const FlightSchedule* sched_;
  EnvConfig cfg_;
  Eigen::VectorXd rates_;
  std::vector<double> expected_per_category_;
  const ArrivalTrace* trace_ = nullptr;
  std::size_t cursor_ = 0;
  ScreeningState state_;
  Rng rng_{0};  // sampled-mode team draws only
};

// Mean per-step reward; the average episode delay is its negation.
double episode_value(const std::vector<double>& rewards);

// Feature layout: one-hot category | per-resource waits clipped at
// wait_cap_min and scaled by it | per-category screened counts normalized by
// expected totals | clock / day length. Dimension 2|C| + |R| + 1.
Eigen::VectorXd encode_state(const ScreeningState& s, const GameInstance& inst,
                             const std::vector<double>& expected_per_category,
                             double day_length_min, const EnvConfig& cfg);

// Expected passengers per category: flight volume times prior.
std::vector<double> expected_category_counts(const GameInstance& inst,
                                             const FlightSchedule& sched);

}  // namespace tsg
