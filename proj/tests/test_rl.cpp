// Learner-side tests: replay buffer semantics, dense-net gradients against
// finite differences, the full actor gradient chain (net -> softmax ->
// feasibility projection -> critic), deterministic training, checkpoint
// round trips, and the independent risk audit.

#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "toy.hpp"
#include "tsg/environment.hpp"
#include "tsg/errors.hpp"
#include "tsg/game.hpp"
#include "tsg/projection.hpp"
#include "tsg/rl.hpp"
#include "tsg/rng.hpp"

using namespace tsg;

namespace {

double max_param_diff(const DenseNet& a, const DenseNet& b) {
  double d = 0.0;
  REQUIRE(a.num_layers() == b.num_layers());
  for (int l = 0; l < a.num_layers(); ++l) {
    d = std::max(d, (a.W[l] - b.W[l]).cwiseAbs().maxCoeff());
    d = std::max(d, (a.b[l] - b.b[l]).cwiseAbs().maxCoeff());
  }
  return d;
}

// Smallest |pre-activation| over all hidden layers; finite-difference
// checks are only trusted when this is comfortably away from the rectifier
// kink.
double min_abs_preactivation(const DenseNet& net, const Eigen::MatrixXd& X) {
  double lo = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd a = X;
  for (int l = 0; l < net.num_layers(); ++l) {
    Eigen::MatrixXd z = (net.W[l] * a).colwise() + net.b[l];
    if (l + 1 < net.num_layers()) {
      lo = std::min(lo, z.cwiseAbs().minCoeff());
      a = z.cwiseMax(0.0);
    }
  }
  return lo;
}

// Relative gap between the two smallest feasible step bounds of the
// projection at s; a tiny gap means the active row is about to switch and
// the gradient has a kink there.
double projection_tie_gap(const Eigen::VectorXd& s, const Polytope& poly) {
  std::vector<double> u;
  u.push_back(1.0);
  for (int i = 0; i < poly.A.rows(); ++i) {
    const double ay0 = poly.A.row(i).dot(poly.interior_point);
    const double d = poly.A.row(i).dot(s) - ay0;
    if (d > 1e-12) u.push_back((poly.b(i) - ay0) / d);
  }
  std::sort(u.begin(), u.end());
  if (u.size() < 2) return std::numeric_limits<double>::infinity();
  return (u[1] - u[0]) / std::max(std::abs(u[0]), 1e-12);
}

}  // namespace

TEST_CASE("replay buffer is a fixed-capacity ring") {
  ReplayBuffer buf(3);
  CHECK(buf.capacity() == 3);
  CHECK(buf.size() == 0);
  for (int i = 1; i <= 5; ++i) {
    Transition t;
    t.r = static_cast<double>(i);
    buf.push(std::move(t));
  }
  CHECK(buf.size() == 3);
  // Pushes 4 and 5 overwrite the two oldest slots in place.
  CHECK(buf[0].r == doctest::Approx(4.0));
  CHECK(buf[1].r == doctest::Approx(5.0));
  CHECK(buf[2].r == doctest::Approx(3.0));
}

TEST_CASE("soft update blends parameters elementwise") {
  Rng r1(substream(900, "a"));
  Rng r2(substream(900, "b"));
  DenseNet target({3, 4, 2}, r1);
  DenseNet src({3, 4, 2}, r2);
  const DenseNet before = target;
  const double rho = 0.25;
  target.soft_update_from(src, rho);
  for (int l = 0; l < target.num_layers(); ++l) {
    Eigen::MatrixXd expect_w = (1.0 - rho) * before.W[l] + rho * src.W[l];
    Eigen::VectorXd expect_b = (1.0 - rho) * before.b[l] + rho * src.b[l];
    CHECK((target.W[l] - expect_w).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((target.b[l] - expect_b).cwiseAbs().maxCoeff() <= 1e-15);
  }
}

TEST_CASE("dense net backward matches finite differences") {
  bool checked = false;
  for (std::uint64_t seed = 1; seed <= 40 && !checked; ++seed) {
    Rng rng(substream(7000, "net", seed));
    DenseNet net({3, 5, 2}, rng);
    Eigen::MatrixXd X(3, 2);
    for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform(-1.0, 1.0);
    if (min_abs_preactivation(net, X) < 1e-2) continue;
    checked = true;

    Eigen::MatrixXd G(2, 2);
    for (int i = 0; i < G.size(); ++i) G.data()[i] = rng.uniform(-1.0, 1.0);
    auto loss = [&](const DenseNet& n, const Eigen::MatrixXd& in) {
      return (n.forward(in).array() * G.array()).sum();
    };

    DenseNet::Cache cache;
    net.forward(X, &cache);
    auto grads = net.zero_grads();
    Eigen::MatrixXd dX = net.backward(G, cache, grads);

    const double eps = 1e-6;
    auto check_entry = [&](double analytic, double* slot) {
      const double keep = *slot;
      *slot = keep + eps;
      const double up = loss(net, X);
      *slot = keep - eps;
      const double dn = loss(net, X);
      *slot = keep;
      const double fd = (up - dn) / (2.0 * eps);
      const double scale = std::max({std::abs(fd), std::abs(analytic), 1e-6});
      CHECK(std::abs(fd - analytic) / scale <= 1e-4);
    };
    for (int l = 0; l < net.num_layers(); ++l) {
      for (int i = 0; i < net.W[l].size(); ++i)
        check_entry(grads.W[l].data()[i], net.W[l].data() + i);
      for (int i = 0; i < net.b[l].size(); ++i)
        check_entry(grads.b[l].data()[i], net.b[l].data() + i);
    }
    for (int i = 0; i < X.size(); ++i) {
      const double keep = X.data()[i];
      X.data()[i] = keep + eps;
      const double up = loss(net, X);
      X.data()[i] = keep - eps;
      const double dn = loss(net, X);
      X.data()[i] = keep;
      const double fd = (up - dn) / (2.0 * eps);
      const double scale =
          std::max({std::abs(fd), std::abs(dX.data()[i]), 1e-6});
      CHECK(std::abs(fd - dX.data()[i]) / scale <= 1e-4);
    }
  }
  REQUIRE(checked);
}

TEST_CASE("actor gradient chain net->softmax->projection->critic matches "
          "finite differences") {
  const GameInstance inst = toy::three_team(0.9);
  const Polytope poly = build_polytope(inst, 0);

  bool checked = false;
  for (std::uint64_t seed = 1; seed <= 60 && !checked; ++seed) {
    Rng rng(substream(7100, "pipe", seed));
    DenseNet actor({4, 8, 3}, rng);
    DenseNet critic({7, 8, 1}, rng);
    Eigen::VectorXd enc(4);
    for (int i = 0; i < 4; ++i) enc(i) = rng.uniform(-1.0, 1.0);

    auto value = [&](const DenseNet& a) {
      Eigen::VectorXd s = softmax(a.forward(enc).col(0));
      ProjectionResult fwd = alpha_forward(s, poly);
      Eigen::VectorXd cat(7);
      cat << enc, fwd.y;
      return critic.forward(cat)(0, 0);
    };

    // Filter out kinks: rectifiers near zero, the projection boundary
    // (alpha == 1), and near-ties between projection bounds.
    Eigen::VectorXd s = softmax(actor.forward(enc).col(0));
    ProjectionResult fwd = alpha_forward(s, poly);
    Eigen::VectorXd cat(7);
    cat << enc, fwd.y;
    if (fwd.alpha >= 0.95 || fwd.alpha <= 0.05) continue;
    if (projection_tie_gap(s, poly) < 1e-4) continue;
    if (min_abs_preactivation(actor, enc) < 1e-2) continue;
    if (min_abs_preactivation(critic, cat) < 1e-2) continue;
    checked = true;

    // Analytic gradient, assembled from the public pieces exactly the way
    // the learner chains them.
    DenseNet::Cache acache;
    Eigen::VectorXd logits = actor.forward(enc, &acache).col(0);
    s = softmax(logits);
    fwd = alpha_forward(s, poly);
    cat << enc, fwd.y;
    DenseNet::Cache ccache;
    critic.forward(cat, &ccache);
    auto cgrads = critic.zero_grads();
    Eigen::MatrixXd dcat =
        critic.backward(Eigen::MatrixXd::Ones(1, 1), ccache, cgrads);
    Eigen::VectorXd g_y = dcat.col(0).tail(3);
    Eigen::VectorXd g_s = alpha_backward(s, poly, fwd, g_y);
    Eigen::VectorXd g_logits =
        s.cwiseProduct(g_s - Eigen::VectorXd::Constant(3, g_s.dot(s)));
    auto agrads = actor.zero_grads();
    actor.backward(g_logits, acache, agrads);

    const double eps = 1e-6;
    int compared = 0;
    for (int l = 0; l < actor.num_layers(); ++l) {
      for (int i = 0; i < actor.W[l].size(); ++i) {
        const double keep = actor.W[l].data()[i];
        actor.W[l].data()[i] = keep + eps;
        const double up = value(actor);
        actor.W[l].data()[i] = keep - eps;
        const double dn = value(actor);
        actor.W[l].data()[i] = keep;
        const double fd = (up - dn) / (2.0 * eps);
        const double an = agrads.W[l].data()[i];
        const double scale = std::max({std::abs(fd), std::abs(an), 1e-6});
        CHECK(std::abs(fd - an) / scale <= 1e-3);
        ++compared;
      }
      for (int i = 0; i < actor.b[l].size(); ++i) {
        const double keep = actor.b[l].data()[i];
        actor.b[l].data()[i] = keep + eps;
        const double up = value(actor);
        actor.b[l].data()[i] = keep - eps;
        const double dn = value(actor);
        actor.b[l].data()[i] = keep;
        const double fd = (up - dn) / (2.0 * eps);
        const double an = agrads.b[l].data()[i];
        const double scale = std::max({std::abs(fd), std::abs(an), 1e-6});
        CHECK(std::abs(fd - an) / scale <= 1e-3);
        ++compared;
      }
    }
    CHECK(compared == 4 * 8 + 8 + 8 * 3 + 3);
  }
  REQUIRE(checked);
}

TEST_CASE("training is bit-deterministic in the seed") {
  const GameInstance inst = toy::fast_slow();
  const FlightSchedule sched = schedule_from_departures({60.0}, 12, 10.0);

  TrainConfig cfg;
  cfg.total_steps = 300;
  cfg.warmup_steps = 50;
  cfg.batch_size = 8;
  cfg.buffer_capacity = 1000;
  cfg.hidden = {8};
  cfg.eval_every = 100;
  cfg.eval_traces = 2;
  cfg.seed = 5;

  TrainResult a = train(inst, sched, cfg);
  TrainResult b = train(inst, sched, cfg);
  REQUIRE(a.curve.rows.size() == b.curve.rows.size());
  REQUIRE(!a.curve.rows.empty());
  for (std::size_t i = 0; i < a.curve.rows.size(); ++i) {
    CHECK(a.curve.rows[i].step == b.curve.rows[i].step);
    CHECK(a.curve.rows[i].actor_loss == b.curve.rows[i].actor_loss);
    CHECK(a.curve.rows[i].critic_loss == b.curve.rows[i].critic_loss);
    CHECK(a.curve.rows[i].eval_avg_delay == b.curve.rows[i].eval_avg_delay);
  }
  CHECK(max_param_diff(a.policy.net(), b.policy.net()) == 0.0);
  CHECK(a.audit.max_violation == b.audit.max_violation);
  CHECK(a.audit.steps == b.audit.steps);
  CHECK(a.audit.steps > 0);
  // The threshold is vacuous here, so the audit should be clean.
  CHECK(a.audit.max_violation <= 1e-9);

  cfg.seed = 6;
  TrainResult c = train(inst, sched, cfg);
  CHECK(max_param_diff(a.policy.net(), c.policy.net()) > 0.0);
}

TEST_CASE("greedy actor outputs stay feasible for every category") {
  const GameInstance inst = toy::three_team(0.9);
  auto polys =
      std::make_shared<const std::vector<Polytope>>(build_all_polytopes(inst));
  Rng rng(substream(7200, "actor"));
  DenseNet net({5, 8, 3}, rng);
  ActorPolicy policy(net, polys, instance_structure_hash(inst),
                     inst.risk_thresholds);

  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd enc(5);
    for (int i = 0; i < 5; ++i) enc(i) = rng.uniform(-3.0, 3.0);
    Eigen::VectorXd pi = policy.act(enc, 0);
    CHECK(is_feasible(pi, (*polys)[0], 1e-9));
    CHECK(std::abs(pi.sum() - 1.0) <= 1e-12);
    CHECK(pi.minCoeff() >= -1e-15);
  }
}

TEST_CASE("checkpoints round-trip parameters bit for bit") {
  const GameInstance inst = toy::three_team(0.9);
  auto polys =
      std::make_shared<const std::vector<Polytope>>(build_all_polytopes(inst));
  Rng rng(substream(7300, "ckpt"));
  DenseNet net({5, 8, 3}, rng);
  ActorPolicy policy(net, polys, instance_structure_hash(inst),
                     inst.risk_thresholds);

  const std::string path = "/tmp/tsg_test_ckpt.json";
  save_checkpoint(policy, path);
  ActorPolicy loaded = load_checkpoint(path, inst);
  CHECK(max_param_diff(policy.net(), loaded.net()) == 0.0);
  CHECK(loaded.structure_hash() == policy.structure_hash());
  REQUIRE(loaded.risk_thresholds().size() == inst.risk_thresholds.size());
  CHECK(loaded.risk_thresholds()[0] == inst.risk_thresholds[0]);

  Eigen::VectorXd enc(5);
  for (int i = 0; i < 5; ++i) enc(i) = rng.uniform(-2.0, 2.0);
  Eigen::VectorXd y0 = policy.act(enc, 0);
  Eigen::VectorXd y1 = loaded.act(enc, 0);
  CHECK((y0 - y1).cwiseAbs().maxCoeff() == 0.0);

  // Same structure with different thresholds is an accepted pairing: the
  // thresholds the policy was trained against live in the checkpoint.
  const GameInstance relaxed = toy::three_team(0.5);
  ActorPolicy reloaded = load_checkpoint(path, relaxed);
  CHECK(reloaded.risk_thresholds()[0] == doctest::Approx(0.9));

  // A structurally different game must be refused.
  CHECK_THROWS_AS(load_checkpoint(path, toy::single_team()), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("instance structure hash ignores thresholds only") {
  const std::uint64_t h1 = instance_structure_hash(toy::three_team(0.9));
  const std::uint64_t h2 = instance_structure_hash(toy::three_team(0.5));
  CHECK(h1 == h2);

  GameInstance tweaked = toy::three_team(0.9);
  tweaked.efficacies(0, 0) = 0.36;
  CHECK(instance_structure_hash(tweaked) != h1);

  GameInstance harsher = toy::three_team(0.9);
  harsher.u_minus(0, 0) = -3.5;
  CHECK(instance_structure_hash(harsher) != h1);
}

TEST_CASE("rollout average delay is the negated mean reward") {
  const GameInstance inst = toy::fast_slow();
  const auto polys = build_all_polytopes(inst);
  const FlightSchedule sched = schedule_from_departures({60.0}, 5, 10.0);
  const ArrivalTrace trace = toy::burst_at(30.0, 0, 5);

  std::vector<Eigen::VectorXd> mix{Eigen::Vector2d(0.5, 0.5)};
  StaticPolicy policy(mix, polys);

  Environment env(inst, polys, sched);
  env.reset(trace, 0);
  std::vector<double> rewards;
  while (!env.done()) {
    Eigen::VectorXd pi = policy.act(env.encode(), env.state().category);
    rewards.push_back(env.step(pi).reward);
  }

  Environment env2(inst, polys, sched);
  const double avg = rollout_average_delay(policy, env2, trace, 0);
  CHECK(avg == -episode_value(rewards));
  CHECK(avg > 0.0);
}

TEST_CASE("risk audit recomputes violations from instance data") {
  GameInstance g;
  g.num_methods = 1;
  g.risk_levels = {0.6, 0.4};
  g.flights = {100.0};
  g.resources = {0.3, 0.1};
  g.teams = {{0}, {1}};
  g.efficacies = Eigen::MatrixXd(2, 1);
  g.efficacies << 0.9, 0.2;
  g.u_plus = Eigen::MatrixXd::Constant(1, 1, 0.0);
  g.u_minus = Eigen::MatrixXd::Constant(1, 1, -5.0);
  g.risk_thresholds = {1.8, 1.8};
  REQUIRE(validate_instance(g).ok());

  RiskAuditAccumulator audit(g);
  // z = 0.55 -> utility -2.25, weighted -1.35 >= -1.8: no violation.
  audit.observe(0, Eigen::Vector2d(0.5, 0.5));
  CHECK(audit.max_violation() == doctest::Approx(0.0).epsilon(1e-12));
  // z = 0.2 -> utility -4.0, weighted -2.4: violates by 0.6.
  audit.observe(0, Eigen::Vector2d(0.0, 1.0));
  CHECK(audit.max_violation() == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(audit.steps() == 2);

  REQUIRE(audit.realized_u_theta().size() == 2);
  CHECK(audit.realized_u_theta()[0] == doctest::Approx(-4.0).epsilon(1e-12));
  // Level 1 was never observed and contributes nothing to the bound.
  CHECK(audit.realized_bound() == doctest::Approx(0.6 * -4.0).epsilon(1e-9));

  AuditSummary sum = summarize(audit);
  CHECK(sum.max_violation == audit.max_violation());
  CHECK(sum.realized_bound == audit.realized_bound());
  CHECK(sum.steps == 2);
}

TEST_CASE("short training matches a balanced static split on the toy game") {
  // Two detection-equivalent queues, one fast and one slow. Anything the
  // learner converges to should at least keep up with the uniform split
  // (the adaptive optimum is strictly better: route to the emptier queue).
  const GameInstance inst = toy::fast_slow(0.3, 0.1, 0.6, 1e6, {90.0});
  const auto polys = build_all_polytopes(inst);
  const FlightSchedule sched = schedule_from_departures({90.0}, 20, 15.0);

  TrainConfig cfg;
  cfg.total_steps = 4000;
  cfg.warmup_steps = 200;
  cfg.batch_size = 32;
  cfg.hidden = {16};
  cfg.actor_lr = 3e-4;
  cfg.critic_lr = 3e-3;
  cfg.eval_every = 500;
  cfg.eval_traces = 10;
  cfg.seed = 3;
  TrainResult result = train(inst, sched, cfg);
  CHECK(result.audit.max_violation <= 1e-9);

  std::vector<Eigen::VectorXd> mix{Eigen::Vector2d(0.5, 0.5)};
  StaticPolicy uniform(mix, polys);

  double sum_rl = 0.0, sum_uniform = 0.0;
  const int kTraces = 20;
  for (int i = 0; i < kTraces; ++i) {
    ArrivalTrace trace = sample_arrivals(sched, inst.risk_levels,
                                         substream(424242, "trace", i), 1);
    Environment env_a(inst, polys, sched);
    sum_rl += rollout_average_delay(result.policy, env_a, trace, 0);
    Environment env_b(inst, polys, sched);
    sum_uniform += rollout_average_delay(uniform, env_b, trace, 0);
  }
  CHECK(sum_uniform > 0.0);
  CHECK(sum_rl <= 1.05 * sum_uniform);
}
