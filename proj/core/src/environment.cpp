#include "tsg/environment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tsg/errors.hpp"

namespace tsg {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

FlightSchedule load_schedule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty schedule");
  std::vector<std::string> header = split_csv_line(trim(line));
  bool has_sigma = header.size() == 4 && trim(header[3]) == "sigma_min";
  if (!(header.size() >= 3 && trim(header[0]) == "flight_id" &&
        trim(header[1]) == "departure_min" && trim(header[2]) == "passengers" &&
        (header.size() == 3 || has_sigma))) {
    throw ConfigError(path + ": expected header flight_id,departure_min,passengers[,sigma_min]");
  }

  FlightSchedule sched;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    std::vector<std::string> cells = split_csv_line(t);
    if (cells.size() < 3 || cells.size() > 4) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": bad row");
    }
    try {
      Flight f;
      f.id = std::stoi(trim(cells[0]));
      f.departure_min = std::stod(trim(cells[1]));
      f.passengers = std::stoi(trim(cells[2]));
      if (cells.size() == 4 && !trim(cells[3]).empty()) {
        f.sigma_min = std::stod(trim(cells[3]));
      }
      if (f.departure_min < 0 || f.passengers < 0 || f.sigma_min <= 0) {
        throw ConfigError(path + ":" + std::to_string(lineno) + ": bad values");
      }
      sched.flights.push_back(f);
    } catch (const std::invalid_argument&) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": bad number");
    } catch (const std::out_of_range&) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": bad number");
    }
  }
  if (sched.flights.empty()) throw ConfigError(path + ": no flights");
  return sched;
}

void save_schedule(const FlightSchedule& sched, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "flight_id,departure_min,passengers,sigma_min\n";
  char buf[128];
  for (const Flight& f : sched.flights) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%d,%.17g\n", f.id,
                  f.departure_min, f.passengers, f.sigma_min);
    out << buf;
  }
}

FlightSchedule schedule_from_departures(const std::vector<double>& departures,
                                        int passengers, double sigma_min) {
  FlightSchedule sched;
  for (std::size_t i = 0; i < departures.size(); ++i) {
    sched.flights.push_back({static_cast<int>(i), departures[i], passengers, sigma_min});
  }
  return sched;
}

ArrivalTrace sample_arrivals(const FlightSchedule& sched,
                             const std::vector<double>& prior,
                             std::uint64_t seed, int num_flights_in_game) {
  if (static_cast<int>(sched.flights.size()) != num_flights_in_game) {
    throw ConfigError("schedule flight count does not match instance");
  }
  Rng rng(seed);
  const int num_theta = static_cast<int>(prior.size());

  ArrivalTrace trace;
  for (const Flight& f : sched.flights) {
    if (f.id < 0 || f.id >= num_flights_in_game) {
      throw ConfigError("schedule flight id " + std::to_string(f.id) +
                        " out of range");
    }
    double mean = f.departure_min - 2.0 * f.sigma_min;
    for (int p = 0; p < f.passengers; ++p) {
      double t = 0.0;
      // Truncate by redraw; fall back to clamping if the window is extreme.
      bool ok = false;
      for (int attempt = 0; attempt < 10000; ++attempt) {
        t = rng.normal(mean, f.sigma_min);
        if (t >= 0.0 && t <= f.departure_min) {
          ok = true;
          break;
        }
      }
      if (!ok) t = std::clamp(t, 0.0, f.departure_min);

      double pick = rng.uniform01();
      int theta = num_theta - 1;
      double acc = 0.0;
      for (int i = 0; i < num_theta; ++i) {
        acc += prior[i];
        if (pick < acc) {
          theta = i;
          break;
        }
      }
      trace.events.push_back({theta * num_flights_in_game + f.id, t});
    }
  }
  std::stable_sort(trace.events.begin(), trace.events.end(),
                   [](const Arrival& a, const Arrival& b) { return a.time < b.time; });
  return trace;
}

Eigen::VectorXd queue_drain(const Eigen::VectorXd& queues, double dt,
                            const Eigen::VectorXd& rates) {
  return (queues - dt * rates).cwiseMax(0.0);
}

double expected_wait(const Eigen::VectorXd& queues,
                     const Eigen::VectorXd& rates, const Eigen::VectorXd& pi,
                     const std::vector<std::vector<int>>& teams) {
  double w = 0.0;
  for (std::size_t t = 0; t < teams.size(); ++t) {
    double team_wait = 0.0;
    for (int r : teams[t]) {
      team_wait = std::max(team_wait, queues(r) / rates(r));
    }
    w += pi(t) * team_wait;
  }
  return w;
}

Environment::Environment(const GameInstance& inst,
                         const std::vector<Polytope>& polys,
                         const FlightSchedule& sched, EnvConfig cfg)
    : inst_(&inst), polys_(&polys), sched_(&sched), cfg_(cfg) {
  rates_ = Eigen::Map<const Eigen::VectorXd>(inst.resources.data(),
                                             inst.num_resources());
  expected_per_category_ = expected_category_counts(inst, sched);
}

void Environment::reset(const ArrivalTrace& trace, std::uint64_t episode_seed) {
  trace_ = &trace;
  cursor_ = 0;
  rng_ = Rng(substream(episode_seed, "sampled-team"));
  state_.queues = Eigen::VectorXd::Zero(inst_->num_resources());
  state_.screened.assign(inst_->num_categories(), 0);
  if (!trace.events.empty()) {
    state_.category = trace.events[0].category;
    state_.clock = trace.events[0].time;
  } else {
    state_.category = 0;
    state_.clock = 0.0;
  }
}

Environment::StepResult Environment::step(const Eigen::VectorXd& pi) {
  if (trace_ == nullptr || done()) {
    throw ConfigError("environment stepped past the end of its trace");
  }
  const int c = state_.category;
  const Polytope& poly = (*polys_)[c];
  for (int i = 0; i < poly.rows(); ++i) {
    double v = poly.A.row(i).dot(pi) - poly.b(i);
    if (v > 1e-9) {
      throw InfeasibleActionAudit(
          "step " + std::to_string(cursor_) + " category " + std::to_string(c) +
          ": polytope row " + std::to_string(i) + " violated by " +
          std::to_string(v));
    }
  }

  StepResult out;
  out.reward = -expected_wait(state_.queues, rates_, pi, inst_->teams);

  if (cfg_.mode == QueueMode::Marginal) {
    for (std::size_t t = 0; t < inst_->teams.size(); ++t) {
      for (int r : inst_->teams[t]) state_.queues(r) += pi(t);
    }
  } else {
    double pick = rng_.uniform01();
    double acc = 0.0;
    std::size_t t = inst_->teams.size() - 1;
    for (std::size_t i = 0; i < inst_->teams.size(); ++i) {
      acc += pi(i);
      if (pick < acc) {
        t = i;
        break;
      }
    }
    for (int r : inst_->teams[t]) state_.queues(r) += 1.0;
  }
  state_.screened[c] += 1;

  ++cursor_;
  if (done()) {
    out.done = true;
    return out;
  }
  const Arrival& next = trace_->events[cursor_];
  double dt = next.time - state_.clock;
  state_.queues = queue_drain(state_.queues, dt, rates_);
  state_.clock = next.time;
  state_.category = next.category;
  out.done = false;
  return out;
}

Eigen::VectorXd Environment::encode() const {
  return encode_state(state_, *inst_, expected_per_category_,
                      sched_->day_length_min, cfg_);
}

int Environment::encoding_dim() const {
  return 2 * inst_->num_categories() + inst_->num_resources() + 1;
}

double episode_value(const std::vector<double>& rewards) {
  if (rewards.empty()) return 0.0;
  double sum = 0.0;
  for (double r : rewards) sum += r;
  return sum / static_cast<double>(rewards.size());
}

Eigen::VectorXd encode_state(const ScreeningState& s, const GameInstance& inst,
                             const std::vector<double>& expected_per_category,
                             double day_length_min, const EnvConfig& cfg) {
  const int C = inst.num_categories();
  const int R = inst.num_resources();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * C + R + 1);
  x(s.category) = 1.0;
  for (int r = 0; r < R; ++r) {
    double wait = s.queues(r) / inst.resources[r];
    x(C + r) = std::min(wait, cfg.wait_cap_min) / cfg.wait_cap_min;
  }
  for (int c = 0; c < C; ++c) {
    x(C + R + c) = s.screened[c] / std::max(1.0, expected_per_category[c]);
  }
  x(2 * C + R) = s.clock / day_length_min;
  return x;
}

std::vector<double> expected_category_counts(const GameInstance& inst,
                                             const FlightSchedule& sched) {
  std::vector<double> counts(inst.num_categories(), 0.0);
  for (const Flight& f : sched.flights) {
    for (int theta = 0; theta < inst.num_risk_levels(); ++theta) {
      counts[inst.category_index(theta, f.id)] =
          f.passengers * inst.risk_levels[theta];
    }
  }
  return counts;
}

}  // namespace tsg
