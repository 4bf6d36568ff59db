#include "tsg/rl.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tsg/errors.hpp"
#include "tsg/projection.hpp"

namespace tsg {

using nlohmann::json;

RiskAuditAccumulator::RiskAuditAccumulator(const GameInstance& inst)
    : inst_(&inst),
      u_min_(inst.num_risk_levels(), std::numeric_limits<double>::infinity()) {}

void RiskAuditAccumulator::observe(int category, const Eigen::VectorXd& pi) {
  auto [theta, kappa] = inst_->category_parts(category);
  const double p = inst_->risk_levels[theta];
  const double psi = inst_->risk_thresholds[theta];
  for (int m = 0; m < inst_->num_methods; ++m) {
    double u = defender_utility(*inst_, pi, kappa, m);
    max_violation_ = std::max(max_violation_, -psi - p * u);
    u_min_[theta] = std::min(u_min_[theta], u);
  }
  ++steps_;
}

double RiskAuditAccumulator::realized_bound() const {
  double total = 0.0;
  for (std::size_t theta = 0; theta < u_min_.size(); ++theta) {
    if (std::isfinite(u_min_[theta])) {
      total += inst_->risk_levels[theta] * u_min_[theta];
    }
  }
  return total;
}

AuditSummary summarize(const RiskAuditAccumulator& acc) {
  AuditSummary s;
  s.max_violation = acc.max_violation();
  s.realized_bound = acc.realized_bound();
  s.realized_u_theta = acc.realized_u_theta();
  s.steps = acc.steps();
  return s;
}

StaticPolicy::StaticPolicy(std::vector<Eigen::VectorXd> mixtures,
                           const std::vector<Polytope>& polys)
    : mixtures_(std::move(mixtures)) {
  for (std::size_t c = 0; c < mixtures_.size(); ++c) {
    double sum = mixtures_[c].sum();
    if (sum <= 0.0) throw ConfigError("static mixture with nonpositive mass");
    mixtures_[c] /= sum;
    mixtures_[c] = alpha_forward(mixtures_[c], polys[c]).y;
  }
}

Eigen::VectorXd StaticPolicy::act(const Eigen::VectorXd&, int category) const {
  return mixtures_[category];
}

ActorPolicy::ActorPolicy(DenseNet net,
                         std::shared_ptr<const std::vector<Polytope>> polys,
                         std::uint64_t structure_hash, std::vector<double> psi)
    : net_(std::move(net)),
      polys_(std::move(polys)),
      structure_hash_(structure_hash),
      psi_(std::move(psi)) {}

Eigen::VectorXd ActorPolicy::act(const Eigen::VectorXd& encoding,
                                 int category) const {
  Eigen::VectorXd logits = net_.forward(encoding);
  return alpha_forward(softmax(logits), (*polys_)[category]).y;
}

namespace {

std::vector<int> actor_sizes(int encoding_dim, int num_teams,
                             const std::vector<int>& hidden) {
  std::vector<int> s{encoding_dim};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(num_teams);
  return s;
}

std::vector<int> critic_sizes(int encoding_dim, int num_teams,
                              const std::vector<int>& hidden) {
  std::vector<int> s{encoding_dim + num_teams};
  s.insert(s.end(), hidden.begin(), hidden.end());
  s.push_back(1);
  return s;
}

}  // namespace

Ddpg::Ddpg(int encoding_dim, int num_teams,
           std::shared_ptr<const std::vector<Polytope>> polys,
           const TrainConfig& cfg, Rng& init_rng)
    : polys_(std::move(polys)),
      cfg_(cfg),
      actor_(actor_sizes(encoding_dim, num_teams, cfg.hidden), init_rng),
      critic_(critic_sizes(encoding_dim, num_teams, cfg.hidden), init_rng),
      actor_target_(actor_),
      critic_target_(critic_),
      actor_opt_(actor_),
      critic_opt_(critic_) {}

Eigen::VectorXd Ddpg::act_greedy(const Eigen::VectorXd& enc, int category) const {
  Eigen::VectorXd logits = actor_.forward(enc);
  return alpha_forward(softmax(logits), (*polys_)[category]).y;
}

Eigen::VectorXd Ddpg::act_noisy(const Eigen::VectorXd& enc, int category,
                                double noise_scale, Rng& noise_rng) const {
  Eigen::VectorXd logits = actor_.forward(enc);
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    logits(i) += noise_scale * noise_rng.normal();
  }
  return alpha_forward(softmax(logits), (*polys_)[category]).y;
}

Ddpg::UpdateStats Ddpg::update(const ReplayBuffer& buf, Rng& sample_rng) {
  const int B = cfg_.batch_size;
  const int ed = actor_.input_dim();
  const int na = actor_.output_dim();

  Eigen::MatrixXd S(ed, B), S2(ed, B), A(na, B);
  Eigen::VectorXd r(B), live(B);
  std::vector<int> cat(B), cat2(B);
  for (int i = 0; i < B; ++i) {
    const Transition& t = buf[sample_rng.index(buf.size())];
    S.col(i) = t.s;
    A.col(i) = t.a;
    r(i) = t.r;
    live(i) = t.done ? 0.0 : 1.0;
    cat[i] = t.c;
    if (t.done) {
      S2.col(i).setZero();
      cat2[i] = 0;
    } else {
      S2.col(i) = t.s2;
      cat2[i] = t.c2;
    }
  }

  // Bootstrap targets through the target nets; undiscounted with terminal
  // masking (episodes are finite days).
  Eigen::MatrixXd L2 = actor_target_.forward(S2);
  Eigen::MatrixXd A2(na, B);
  for (int i = 0; i < B; ++i) {
    A2.col(i) = alpha_forward(softmax(L2.col(i)), (*polys_)[cat2[i]]).y;
  }
  Eigen::MatrixXd SA2(ed + na, B);
  SA2 << S2, A2;
  Eigen::RowVectorXd q2 = critic_target_.forward(SA2).row(0);
  Eigen::RowVectorXd y =
      r.transpose() + (live.transpose().array() * q2.array()).matrix();

  // Critic regression toward y.
  Eigen::MatrixXd SA(ed + na, B);
  SA << S, A;
  DenseNet::Cache ccache;
  Eigen::RowVectorXd q = critic_.forward(SA, &ccache).row(0);
  Eigen::RowVectorXd err = q - y;
  double critic_loss = err.squaredNorm() / B;
  DenseNet::Grads cgrads = critic_.zero_grads();
  critic_.backward((2.0 / B) * err, ccache, cgrads);
  critic_opt_.step(critic_, cgrads, cfg_.critic_lr, cfg_.grad_clip);

  // Actor ascent on Q(s, a(s)): gradient flows through the critic input, the
  // projection, and the softmax.
  DenseNet::Cache acache;
  Eigen::MatrixXd L = actor_.forward(S, &acache);
  std::vector<Eigen::VectorXd> smx(B);
  std::vector<ProjectionResult> prj(B);
  Eigen::MatrixXd Apol(na, B);
  for (int i = 0; i < B; ++i) {
    smx[i] = softmax(L.col(i));
    prj[i] = alpha_forward(smx[i], (*polys_)[cat[i]]);
    Apol.col(i) = prj[i].y;
  }
  Eigen::MatrixXd SApol(ed + na, B);
  SApol << S, Apol;
  DenseNet::Cache qcache;
  Eigen::RowVectorXd qpol = critic_.forward(SApol, &qcache).row(0);
  double actor_loss = -qpol.mean();
  DenseNet::Grads scratch = critic_.zero_grads();
  Eigen::MatrixXd dSA = critic_.backward(
      Eigen::MatrixXd::Constant(1, B, -1.0 / B), qcache, scratch);
  Eigen::MatrixXd dA = dSA.bottomRows(na);
  Eigen::MatrixXd dL(na, B);
  for (int i = 0; i < B; ++i) {
    Eigen::VectorXd gs =
        alpha_backward(smx[i], (*polys_)[cat[i]], prj[i], dA.col(i));
    dL.col(i) = smx[i].cwiseProduct(
        (gs.array() - gs.dot(smx[i])).matrix());
  }
  DenseNet::Grads agrads = actor_.zero_grads();
  actor_.backward(dL, acache, agrads);
  actor_opt_.step(actor_, agrads, cfg_.actor_lr, cfg_.grad_clip);

  actor_target_.soft_update_from(actor_, cfg_.soft_update);
  critic_target_.soft_update_from(critic_, cfg_.soft_update);

  if (!std::isfinite(critic_loss) || !std::isfinite(actor_loss)) {
    throw NumericsError("ddpg update produced a non-finite loss (critic=" +
                        std::to_string(critic_loss) + ", actor=" +
                        std::to_string(actor_loss) + ")");
  }
  return {critic_loss, actor_loss};
}

double rollout_average_delay(const Policy& policy, Environment& env,
                             const ArrivalTrace& trace,
                             std::uint64_t episode_seed,
                             RiskAuditAccumulator* audit) {
  env.reset(trace, episode_seed);
  std::vector<double> rewards;
  rewards.reserve(trace.events.size());
  while (!env.done()) {
    int c = env.state().category;
    Eigen::VectorXd a = policy.act(env.encode(), c);
    if (audit) audit->observe(c, a);
    rewards.push_back(env.step(a).reward);
  }
  return -episode_value(rewards);
}

TrainResult train(const GameInstance& inst, const FlightSchedule& sched,
                  const TrainConfig& cfg) {
  auto polys = std::make_shared<const std::vector<Polytope>>(
      build_all_polytopes(inst));
  Environment env(inst, *polys, sched, cfg.env);
  Environment eval_env(inst, *polys, sched, cfg.env);

  Rng init_rng(substream(cfg.seed, "init"));
  Rng noise_rng(substream(cfg.seed, "noise"));
  Rng replay_rng(substream(cfg.seed, "replay"));
  Ddpg ddpg(env.encoding_dim(), inst.num_teams(), polys, cfg, init_rng);
  ReplayBuffer buf(cfg.buffer_capacity);
  RiskAuditAccumulator audit(inst);

  std::vector<ArrivalTrace> eval_traces;
  for (int i = 0; i < cfg.eval_traces; ++i) {
    eval_traces.push_back(sample_arrivals(
        sched, inst.risk_levels, substream(cfg.seed, "eval-trace", i),
        inst.num_flights()));
  }

  double expected_pax = 0.0;
  for (const Flight& f : sched.flights) expected_pax += f.passengers;
  const double reward_scale =
      cfg.scale_rewards ? 1.0 / std::max(1.0, expected_pax) : 1.0;

  TrainResult result;

  auto evaluate_now = [&](RiskAuditAccumulator* acc) {
    double total = 0.0;
    ActorPolicy probe_policy(ddpg.actor(), polys, instance_structure_hash(inst),
                             inst.risk_thresholds);
    for (std::size_t i = 0; i < eval_traces.size(); ++i) {
      total += rollout_average_delay(probe_policy, eval_env, eval_traces[i],
                                     substream(cfg.seed, "eval-episode", i), acc);
    }
    return eval_traces.empty() ? 0.0 : total / eval_traces.size();
  };

  DenseNet best_actor = ddpg.actor();
  double best_delay = std::numeric_limits<double>::infinity();
  bool have_snapshot = false;

  double loss_acc_a = 0.0, loss_acc_c = 0.0;
  long loss_count = 0;
  long step = 0, episode = 0;

  auto t0 = std::chrono::steady_clock::now();
  while (step < cfg.total_steps) {
    ArrivalTrace trace = sample_arrivals(sched, inst.risk_levels,
                                         substream(cfg.seed, "trace", episode),
                                         inst.num_flights());
    env.reset(trace, substream(cfg.seed, "episode", episode));
    ++episode;
    if (trace.events.empty()) continue;

    Eigen::VectorXd enc = env.encode();
    int c = env.state().category;
    while (!env.done() && step < cfg.total_steps) {
      double frac = cfg.total_steps > 1
                        ? static_cast<double>(step) / (cfg.total_steps - 1)
                        : 1.0;
      double noise =
          cfg.noise_scale + frac * (cfg.noise_scale_final - cfg.noise_scale);
      Eigen::VectorXd a = ddpg.act_noisy(enc, c, noise, noise_rng);
      audit.observe(c, a);
      Environment::StepResult sr = env.step(a);

      Transition t;
      t.s = std::move(enc);
      t.c = c;
      t.a = std::move(a);
      t.r = sr.reward * reward_scale;
      t.done = sr.done;
      if (!sr.done) {
        t.s2 = env.encode();
        t.c2 = env.state().category;
        enc = t.s2;
        c = t.c2;
      } else {
        t.s2 = Eigen::VectorXd();
        t.c2 = 0;
      }
      buf.push(std::move(t));
      ++step;

      if (step >= cfg.warmup_steps &&
          buf.size() >= static_cast<std::size_t>(cfg.batch_size)) {
        Ddpg::UpdateStats st = ddpg.update(buf, replay_rng);
        loss_acc_c += st.critic_loss;
        loss_acc_a += st.actor_loss;
        ++loss_count;
      }

      if (cfg.eval_every > 0 && step % cfg.eval_every == 0) {
        double delay = evaluate_now(&audit);
        CurveRow row;
        row.step = step;
        row.actor_loss = loss_count ? loss_acc_a / loss_count : 0.0;
        row.critic_loss = loss_count ? loss_acc_c / loss_count : 0.0;
        row.eval_avg_delay = delay;
        result.curve.rows.push_back(row);
        loss_acc_a = loss_acc_c = 0.0;
        loss_count = 0;
        if (delay < best_delay) {
          best_delay = delay;
          best_actor = ddpg.actor();
          have_snapshot = true;
        }
      }
    }
  }
  if (cfg.total_steps > 0 &&
      (result.curve.rows.empty() ||
       result.curve.rows.back().step != cfg.total_steps)) {
    double delay = evaluate_now(&audit);
    CurveRow row;
    row.step = cfg.total_steps;
    row.actor_loss = loss_count ? loss_acc_a / loss_count : 0.0;
    row.critic_loss = loss_count ? loss_acc_c / loss_count : 0.0;
    row.eval_avg_delay = delay;
    result.curve.rows.push_back(row);
    if (delay < best_delay) {
      best_delay = delay;
      best_actor = ddpg.actor();
      have_snapshot = true;
    }
  }
  auto t1 = std::chrono::steady_clock::now();
  result.update_loop_seconds = std::chrono::duration<double>(t1 - t0).count();

  DenseNet final_actor =
      (cfg.select_best_eval && have_snapshot) ? best_actor : ddpg.actor();
  result.policy = ActorPolicy(std::move(final_actor), polys,
                              instance_structure_hash(inst),
                              inst.risk_thresholds);
  result.audit = summarize(audit);
  return result;
}

std::uint64_t instance_structure_hash(const GameInstance& inst) {
  GameInstance copy = inst;
  std::fill(copy.risk_thresholds.begin(), copy.risk_thresholds.end(), 0.0);
  return instance_hash(copy);
}

namespace {

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void save_checkpoint(const ActorPolicy& policy, const std::string& path) {
  json j;
  j["version"] = 1;
  j["structure_hash"] = hash_hex(policy.structure_hash());
  j["risk_thresholds"] = policy.risk_thresholds();
  j["sizes"] = policy.net().sizes;
  json weights = json::array(), biases = json::array();
  for (int l = 0; l < policy.net().num_layers(); ++l) {
    weights.push_back(matrix_rows(policy.net().W[l]));
    json bias = json::array();
    for (Eigen::Index i = 0; i < policy.net().b[l].size(); ++i) {
      bias.push_back(policy.net().b[l](i));
    }
    biases.push_back(std::move(bias));
  }
  j["weights"] = std::move(weights);
  j["biases"] = std::move(biases);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << "\n";
}

ActorPolicy load_checkpoint(const std::string& path, const GameInstance& inst) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != 1) {
      throw ConfigError("checkpoint: unsupported version");
    }
    if (j.at("structure_hash").get<std::string>() !=
        hash_hex(instance_structure_hash(inst))) {
      throw ConfigError("checkpoint was trained on a different instance");
    }
    std::vector<double> psi =
        j.at("risk_thresholds").get<std::vector<double>>();
    if (psi.size() != inst.risk_thresholds.size()) {
      throw ConfigError("checkpoint: threshold count mismatch");
    }

    DenseNet net;
    net.sizes = j.at("sizes").get<std::vector<int>>();
    const json& weights = j.at("weights");
    const json& biases = j.at("biases");
    for (std::size_t l = 0; l + 1 < net.sizes.size(); ++l) {
      Eigen::MatrixXd w(net.sizes[l + 1], net.sizes[l]);
      const json& wj = weights.at(l);
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index k = 0; k < w.cols(); ++k) {
          w(i, k) = wj.at(i).at(k).get<double>();
        }
      }
      Eigen::VectorXd bias(net.sizes[l + 1]);
      const json& bj = biases.at(l);
      for (Eigen::Index i = 0; i < bias.size(); ++i) {
        bias(i) = bj.at(i).get<double>();
      }
      net.W.push_back(std::move(w));
      net.b.push_back(std::move(bias));
    }

    GameInstance rebuilt = inst;
    rebuilt.risk_thresholds = psi;
    auto polys = std::make_shared<const std::vector<Polytope>>(
        build_all_polytopes(rebuilt));
    return ActorPolicy(std::move(net), std::move(polys),
                       instance_structure_hash(inst), std::move(psi));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace tsg
