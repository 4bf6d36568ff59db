// Microbenchmarks for the hot paths: the feasibility projection and its
// gradient, polytope construction, the dense LP solver, environment stepping,
// and one learner update.

#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "tsg/environment.hpp"
#include "tsg/game.hpp"
#include "tsg/lp.hpp"
#include "tsg/projection.hpp"
#include "tsg/replay.hpp"
#include "tsg/rl.hpp"
#include "tsg/rng.hpp"
#include "tsg/static_lp.hpp"

namespace {

using namespace tsg;

GameInstance bench_instance(int flights) {
  InstanceConfig cfg;
  cfg.flights = flights;
  GameInstance inst = sample_instance(cfg, 7);
  for (double& psi : inst.risk_thresholds) psi = 2.0;  // real cuts
  return inst;
}

void BM_AlphaForward(benchmark::State& state) {
  const GameInstance inst = bench_instance(10);
  const auto polys = build_all_polytopes(inst);
  Rng rng(3);
  std::vector<Eigen::VectorXd> points;
  for (int i = 0; i < 256; ++i) {
    Eigen::VectorXd logits(inst.num_teams());
    for (int t = 0; t < inst.num_teams(); ++t) logits(t) = 2.0 * rng.normal();
    points.push_back(softmax(logits));
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(alpha_forward(points[i & 255], polys[i % 50]));
    ++i;
  }
}
BENCHMARK(BM_AlphaForward);

void BM_AlphaBackward(benchmark::State& state) {
  const GameInstance inst = bench_instance(10);
  const auto polys = build_all_polytopes(inst);
  Rng rng(4);
  Eigen::VectorXd logits(inst.num_teams());
  for (int t = 0; t < inst.num_teams(); ++t) logits(t) = 2.0 * rng.normal();
  const Eigen::VectorXd s = softmax(logits);
  const ProjectionResult fwd = alpha_forward(s, polys[0]);
  Eigen::VectorXd up(inst.num_teams());
  for (int t = 0; t < inst.num_teams(); ++t) up(t) = rng.normal();
  for (auto _ : state) {
    benchmark::DoNotOptimize(alpha_backward(s, polys[0], fwd, up));
  }
}
BENCHMARK(BM_AlphaBackward);

void BM_BuildPolytopes(benchmark::State& state) {
  const GameInstance inst = bench_instance(10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_all_polytopes(inst));
  }
}
BENCHMARK(BM_BuildPolytopes);

void BM_SolveLp(benchmark::State& state) {
  // A mid-sized dense program in the shape the plan solver produces.
  const GameInstance inst = bench_instance(10);
  const FlightSchedule sched = schedule_from_departures(inst.flights, 30);
  const std::vector<double> counts = expected_category_counts(inst, sched);
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_static_lp(inst, counts));
  }
}
BENCHMARK(BM_SolveLp);

void BM_EnvStep(benchmark::State& state) {
  const GameInstance inst = bench_instance(10);
  const auto polys = build_all_polytopes(inst);
  const FlightSchedule sched = schedule_from_departures(inst.flights, 30);
  const ArrivalTrace trace = sample_arrivals(sched, inst.risk_levels, 5,
                                             inst.num_flights());
  Environment env(inst, polys, sched);
  env.reset(trace, 0);
  for (auto _ : state) {
    if (env.done()) env.reset(trace, 0);
    const int c = env.state().category;
    benchmark::DoNotOptimize(env.step(polys[c].interior_point));
  }
}
BENCHMARK(BM_EnvStep);

void BM_Encode(benchmark::State& state) {
  const GameInstance inst = bench_instance(10);
  const auto polys = build_all_polytopes(inst);
  const FlightSchedule sched = schedule_from_departures(inst.flights, 30);
  const ArrivalTrace trace = sample_arrivals(sched, inst.risk_levels, 5,
                                             inst.num_flights());
  Environment env(inst, polys, sched);
  env.reset(trace, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(env.encode());
  }
}
BENCHMARK(BM_Encode);

void BM_LearnerUpdate(benchmark::State& state) {
  const GameInstance inst = bench_instance(10);
  auto polys =
      std::make_shared<const std::vector<Polytope>>(build_all_polytopes(inst));
  const FlightSchedule sched = schedule_from_departures(inst.flights, 30);
  const ArrivalTrace trace = sample_arrivals(sched, inst.risk_levels, 5,
                                             inst.num_flights());

  TrainConfig cfg;
  Environment env(inst, *polys, sched);
  env.reset(trace, 0);
  Rng init(substream(1, "init"));
  Ddpg learner(env.encoding_dim(), inst.num_teams(), polys, cfg, init);

  ReplayBuffer buf(cfg.buffer_capacity);
  Rng noise(substream(1, "noise"));
  while (!env.done()) {
    Transition t;
    t.s = env.encode();
    t.c = env.state().category;
    t.a = learner.act_noisy(t.s, t.c, 0.3, noise);
    auto sr = env.step(t.a);
    t.r = sr.reward;
    t.done = sr.done;
    t.s2 = sr.done ? t.s : env.encode();
    t.c2 = sr.done ? t.c : env.state().category;
    buf.push(std::move(t));
  }
  Rng sample(substream(1, "replay"));
  for (auto _ : state) {
    benchmark::DoNotOptimize(learner.update(buf, sample));
  }
}
BENCHMARK(BM_LearnerUpdate);

}  // namespace

BENCHMARK_MAIN();
