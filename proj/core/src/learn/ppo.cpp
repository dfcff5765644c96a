#include "fluidrl/learn/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "fluidrl/learn/gae.hpp"
#include "fluidrl/learn/schedule.hpp"

namespace fluidrl {

void RolloutBatch::clear() {
  T = E = 0;
  obs.clear();
  critic_in.clear();
  actions.clear();
  logp.clear();
  values.clear();
  rewards.clear();
  alive.clear();
  done.clear();
}

namespace {

ParameterSet build_params(const PolicyLearnerConfig& cfg, Rng& rng) {
  if (cfg.n_agents <= 0 || cfg.n_actions <= 0 || cfg.obs_size <= 0)
    throw std::runtime_error("policy learner: bad dimensions");
  if (cfg.actor.input_size() != cfg.obs_size)
    throw std::runtime_error("policy learner: actor input size mismatch");
  if (cfg.actor.actions != cfg.n_actions)
    throw std::runtime_error("policy learner: actor action count mismatch");
  const Head want = cfg.centralized ? Head::kPolicy : Head::kPolicyValue;
  if (cfg.actor.head != want)
    throw std::runtime_error("policy learner: wrong actor head");
  if (cfg.centralized) {
    if (cfg.critic.head != Head::kValue)
      throw std::runtime_error("policy learner: critic must be a value net");
    if (cfg.critic.input_size() != cfg.critic_input)
      throw std::runtime_error("policy learner: critic input size mismatch");
  }
  ParameterSet set;
  init_params(cfg.actor, set, "pi.", rng);
  if (cfg.centralized) init_params(cfg.critic, set, "vf.", rng);
  return set;
}

int argmax_row(const Tensor& t, int row) {
  int best = 0;
  for (int c = 1; c < t.cols(); ++c)
    if (t.at(row, c) > t.at(row, best)) best = c;
  return best;
}

std::vector<std::pair<int, int>> alive_rows(int n_envs, int n_agents,
                                            const std::uint8_t* alive) {
  std::vector<std::pair<int, int>> rows;
  for (int e = 0; e < n_envs; ++e)
    for (int i = 0; i < n_agents; ++i)
      if (alive[static_cast<std::size_t>(e) * n_agents + i])
        rows.emplace_back(e, i);
  return rows;
}

}  // namespace

PolicyLearner::PolicyLearner(PolicyLearnerConfig cfg, Rng& init_rng)
    : cfg_(std::move(cfg)),
      params_(build_params(cfg_, init_rng)),
      opt_(params_) {}

void PolicyLearner::ensure_envs(int n_envs) {
  if (buf_.T == 0 && !pending_) {
    buf_.E = n_envs;
    buf_.A = cfg_.n_agents;
    buf_.S = cfg_.obs_size;
    buf_.C = cfg_.centralized ? cfg_.critic_input : 0;
  } else if (buf_.E != n_envs) {
    throw std::runtime_error("policy learner: env count changed mid-rollout");
  }
}

std::vector<double> PolicyLearner::step_values(
    int n_envs, const double* obs, const std::uint8_t* alive,
    const double* critic_in) const {
  const int A = cfg_.n_agents, S = cfg_.obs_size;
  std::vector<double> v(static_cast<std::size_t>(n_envs) * A, 0.0);
  if (cfg_.centralized) {
    if (!critic_in)
      throw std::runtime_error("policy learner: missing critic input");
    Tensor x({n_envs, cfg_.critic_input});
    std::copy(critic_in, critic_in + x.data.size(), x.data.begin());
    Tensor out = net_eval(cfg_.critic, params_, "vf.", x);
    for (int e = 0; e < n_envs; ++e)
      for (int i = 0; i < A; ++i)
        if (alive[static_cast<std::size_t>(e) * A + i])
          v[static_cast<std::size_t>(e) * A + i] = out.data[e];
    return v;
  }
  auto rows = alive_rows(n_envs, A, alive);
  if (rows.empty()) return v;
  Tensor x({static_cast<int>(rows.size()), S});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double* src =
        obs + (static_cast<std::size_t>(rows[r].first) * A + rows[r].second) * S;
    std::copy(src, src + S, x.data.begin() + r * S);
  }
  EvalOutput out = net_eval_full(cfg_.actor, params_, "pi.", x);
  for (std::size_t r = 0; r < rows.size(); ++r)
    v[static_cast<std::size_t>(rows[r].first) * A + rows[r].second] =
        out.value.data[r];
  return v;
}

void PolicyLearner::act(int n_envs, const double* obs,
                        const std::uint8_t* alive, const double* critic_in,
                        Rng& rng, int* actions) {
  if (pending_)
    throw std::runtime_error("policy learner: record the previous step first");
  ensure_envs(n_envs);
  const int A = cfg_.n_agents, S = cfg_.obs_size, nact = cfg_.n_actions;

  auto rows = alive_rows(n_envs, A, alive);
  Tensor logits;
  if (!rows.empty()) {
    Tensor x({static_cast<int>(rows.size()), S});
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double* src =
          obs +
          (static_cast<std::size_t>(rows[r].first) * A + rows[r].second) * S;
      std::copy(src, src + S, x.data.begin() + r * S);
    }
    logits = net_eval(cfg_.actor, params_, "pi.", x);
  }
  std::vector<double> values = step_values(n_envs, obs, alive, critic_in);

  std::vector<float> logp(static_cast<std::size_t>(n_envs) * A, 0.0f);
  for (std::size_t k = 0; k < static_cast<std::size_t>(n_envs) * A; ++k)
    actions[k] = nact - 1;
  std::vector<double> w(nact);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    double mx = logits.at(static_cast<int>(r), 0);
    for (int a = 1; a < nact; ++a)
      mx = std::max(mx, logits.at(static_cast<int>(r), a));
    double norm = 0.0;
    for (int a = 0; a < nact; ++a) {
      w[a] = std::exp(logits.at(static_cast<int>(r), a) - mx);
      norm += w[a];
    }
    const int a = rng.categorical(w);
    const std::size_t k =
        static_cast<std::size_t>(rows[r].first) * A + rows[r].second;
    actions[k] = a;
    logp[k] = static_cast<float>(std::log(w[a] / norm));
  }

  const std::size_t n = static_cast<std::size_t>(n_envs) * A;
  buf_.obs.reserve(buf_.obs.size() + n * S);
  for (std::size_t k = 0; k < n; ++k) {
    const double* src = obs + k * S;
    for (int j = 0; j < S; ++j)
      buf_.obs.push_back(static_cast<float>(src[j]));
  }
  if (cfg_.centralized) {
    const std::size_t nc = static_cast<std::size_t>(n_envs) * cfg_.critic_input;
    for (std::size_t k = 0; k < nc; ++k)
      buf_.critic_in.push_back(static_cast<float>(critic_in[k]));
  }
  buf_.actions.insert(buf_.actions.end(), actions, actions + n);
  buf_.logp.insert(buf_.logp.end(), logp.begin(), logp.end());
  for (std::size_t k = 0; k < n; ++k)
    buf_.values.push_back(static_cast<float>(values[k]));
  buf_.alive.insert(buf_.alive.end(), alive, alive + n);
  pending_ = true;
}

void PolicyLearner::act_greedy(int n_envs, const double* obs,
                               const std::uint8_t* alive, int* actions) const {
  const int A = cfg_.n_agents, S = cfg_.obs_size, nact = cfg_.n_actions;
  for (std::size_t k = 0; k < static_cast<std::size_t>(n_envs) * A; ++k)
    actions[k] = nact - 1;
  auto rows = alive_rows(n_envs, A, alive);
  if (rows.empty()) return;
  Tensor x({static_cast<int>(rows.size()), S});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double* src =
        obs + (static_cast<std::size_t>(rows[r].first) * A + rows[r].second) * S;
    std::copy(src, src + S, x.data.begin() + r * S);
  }
  Tensor logits = net_eval(cfg_.actor, params_, "pi.", x);
  for (std::size_t r = 0; r < rows.size(); ++r)
    actions[static_cast<std::size_t>(rows[r].first) * A + rows[r].second] =
        argmax_row(logits, static_cast<int>(r));
}

void PolicyLearner::record(int n_envs, const double* rewards,
                           const std::uint8_t* done) {
  if (!pending_) throw std::runtime_error("policy learner: no pending step");
  if (n_envs != buf_.E)
    throw std::runtime_error("policy learner: env count changed mid-rollout");
  const std::size_t n = static_cast<std::size_t>(n_envs) * cfg_.n_agents;
  buf_.rewards.insert(buf_.rewards.end(), rewards, rewards + n);
  buf_.done.insert(buf_.done.end(), done, done + n_envs);
  ++buf_.T;
  pending_ = false;
}

PolicyUpdateStats PolicyLearner::update(int n_envs, const double* final_obs,
                                        const std::uint8_t* final_alive,
                                        const double* final_critic_in,
                                        Rng& rng, double progress) {
  if (pending_) throw std::runtime_error("policy learner: step not recorded");
  if (buf_.T == 0) throw std::runtime_error("policy learner: empty rollout");
  if (n_envs != buf_.E)
    throw std::runtime_error("policy learner: env count changed mid-rollout");
  const int T = buf_.T, E = buf_.E, A = buf_.A, S = buf_.S;
  const auto idx = [E, A](int t, int e, int i) {
    return (static_cast<std::size_t>(t) * E + e) * A + i;
  };

  std::vector<double> final_v =
      step_values(n_envs, final_obs, final_alive, final_critic_in);

  // Per-stream advantage estimation, then one normalization pass over the
  // alive rows.
  std::vector<double> adv(static_cast<std::size_t>(T) * E * A, 0.0);
  std::vector<double> vtarget(adv.size(), 0.0);
  {
    std::vector<double> r(T), v(T + 1);
    std::vector<std::uint8_t> d(T);
    for (int e = 0; e < E; ++e) {
      for (int t = 0; t < T; ++t) d[t] = buf_.done[static_cast<std::size_t>(t) * E + e];
      for (int i = 0; i < A; ++i) {
        for (int t = 0; t < T; ++t) {
          r[t] = buf_.rewards[idx(t, e, i)];
          v[t] = buf_.values[idx(t, e, i)];
        }
        v[T] = final_v[static_cast<std::size_t>(e) * A + i];
        std::vector<double> a = gae_advantages(r, v, d, cfg_.gamma, cfg_.lam);
        for (int t = 0; t < T; ++t) {
          adv[idx(t, e, i)] = a[t];
          vtarget[idx(t, e, i)] = a[t] + v[t];
        }
      }
    }
  }
  {
    double sum = 0.0, sq = 0.0;
    long long n = 0;
    for (std::size_t k = 0; k < adv.size(); ++k)
      if (buf_.alive[k]) {
        sum += adv[k];
        sq += adv[k] * adv[k];
        ++n;
      }
    const double mean = n ? sum / n : 0.0;
    const double var = n ? std::max(0.0, sq / n - mean * mean) : 0.0;
    const double sd = std::sqrt(var);
    for (std::size_t k = 0; k < adv.size(); ++k)
      adv[k] = buf_.alive[k] ? (adv[k] - mean) / (sd + 1e-8) : 0.0;
  }

  PolicyUpdateStats stats;
  stats.lr = linear_schedule(cfg_.lr_init, cfg_.lr_min, progress);
  int applied = 0;

  std::vector<int> pool(static_cast<std::size_t>(T) * E);
  for (std::size_t k = 0; k < pool.size(); ++k) pool[k] = static_cast<int>(k);
  const int M = std::max(1, cfg_.minibatches);

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    rng.shuffle(pool);
    const int P = static_cast<int>(pool.size());
    const int base = P / M, rem = P % M;
    int cursor = 0;
    for (int m = 0; m < M; ++m) {
      const int len = base + (m < rem ? 1 : 0);
      if (len == 0) continue;
      std::vector<int> chunk(pool.begin() + cursor,
                             pool.begin() + cursor + len);
      cursor += len;

      std::vector<std::pair<int, int>> rows;  // (pool entry t*E+e, slot)
      for (int te : chunk)
        for (int i = 0; i < A; ++i)
          if (buf_.alive[static_cast<std::size_t>(te) * A + i])
            rows.emplace_back(te, i);
      if (rows.empty()) continue;
      const int R = static_cast<int>(rows.size());

      Tensor x({R, S});
      std::vector<int> taken(R);
      std::vector<double> lp_old(R), advr(R), vtr(R);
      for (int r = 0; r < R; ++r) {
        const std::size_t k =
            static_cast<std::size_t>(rows[r].first) * A + rows[r].second;
        const float* src = buf_.obs.data() + k * S;
        std::copy(src, src + S, x.data.begin() + static_cast<std::size_t>(r) * S);
        taken[r] = buf_.actions[k];
        lp_old[r] = buf_.logp[k];
        advr[r] = adv[k];
        vtr[r] = vtarget[k];
      }

      Tape tape;
      BoundParams bound = bind(tape, params_);
      NetOutput ao = net_forward(tape, cfg_.actor, bound, "pi.", x, true, &rng);
      Var ls = tape.log_softmax(ao.out);
      Var lp_new = tape.gather_cols(ls, taken);
      Var ratio = tape.exp_(
          tape.sub(lp_new, tape.value(Tensor({R}, std::move(lp_old)))));

      bool finite = true;
      for (double v : tape.val(ratio).data)
        if (!std::isfinite(v)) {
          finite = false;
          break;
        }
      if (!finite) {
        ++stats.skipped_minibatches;
        continue;
      }

      Var advc = tape.value(Tensor({R}, std::move(advr)));
      Var surr1 = tape.mul(ratio, advc);
      Var surr2 = tape.mul(tape.clamp(ratio, 1.0 - cfg_.clip, 1.0 + cfg_.clip),
                           advc);
      Var pg = tape.scale(tape.mean_all(tape.min2(surr1, surr2)), -1.0);

      Var vloss{};
      if (cfg_.centralized) {
        const int Rc = static_cast<int>(chunk.size());
        Tensor xc({Rc, cfg_.critic_input});
        std::vector<double> ybar(Rc, 0.0), weight(Rc, 0.0);
        for (int c = 0; c < Rc; ++c) {
          const float* src =
              buf_.critic_in.data() +
              static_cast<std::size_t>(chunk[c]) * cfg_.critic_input;
          std::copy(src, src + cfg_.critic_input,
                    xc.data.begin() + static_cast<std::size_t>(c) * cfg_.critic_input);
          double s = 0.0;
          int n = 0;
          for (int i = 0; i < A; ++i) {
            const std::size_t k = static_cast<std::size_t>(chunk[c]) * A + i;
            if (!buf_.alive[k]) continue;
            s += vtarget[k];
            ++n;
          }
          if (n) {
            ybar[c] = s / n;
            weight[c] = n;
          }
        }
        NetOutput co =
            net_forward(tape, cfg_.critic, bound, "vf.", xc, true, &rng);
        Var d = tape.sub(co.out, tape.value(Tensor({Rc}, std::move(ybar))));
        vloss = tape.masked_mean(tape.mul(d, d), weight);
      } else {
        Var d = tape.sub(ao.value, tape.value(Tensor({R}, std::move(vtr))));
        vloss = tape.mean_all(tape.mul(d, d));
      }

      Var p = tape.exp_(ls);
      Var ent = tape.scale(tape.mean_all(tape.row_sum(tape.mul(ls, p))), -1.0);

      Var total = tape.add(tape.add(pg, tape.scale(vloss, cfg_.vloss_coef)),
                           tape.scale(ent, -cfg_.ent_coef));
      tape.backward(total);
      std::vector<Tensor> grads = collect_grads(tape, bound);
      const double gn = clip_global_norm(grads, cfg_.max_grad_norm);
      opt_.step(params_, grads, stats.lr);

      stats.loss += tape.val(total).data[0];
      stats.policy_loss += tape.val(pg).data[0];
      stats.value_loss += tape.val(vloss).data[0];
      stats.entropy += tape.val(ent).data[0];
      stats.grad_norm += gn;
      ++applied;
    }
  }
  if (applied) {
    stats.loss /= applied;
    stats.policy_loss /= applied;
    stats.value_loss /= applied;
    stats.entropy /= applied;
    stats.grad_norm /= applied;
  }
  buf_.clear();
  return stats;
}

void PolicyLearner::save(
    const std::string& path,
    const std::map<std::string, std::string>& extra_meta) const {
  std::map<std::string, std::string> meta = extra_meta;
  meta["algo"] = cfg_.centralized
                     ? (cfg_.state_critic ? "mappo_state" : "mappo")
                     : "ppo";
  meta["n_agents"] = std::to_string(cfg_.n_agents);
  meta["n_actions"] = std::to_string(cfg_.n_actions);
  meta["obs_size"] = std::to_string(cfg_.obs_size);
  meta["spawn_action"] = std::to_string(cfg_.spawn_action);
  meta["critic_input"] = std::to_string(cfg_.critic_input);
  meta["gamma"] = std::to_string(cfg_.gamma);
  meta["lam"] = std::to_string(cfg_.lam);
  meta["actor"] = cfg_.actor.to_json();
  if (cfg_.centralized) meta["critic"] = cfg_.critic.to_json();
  save_checkpoint(path, params_, meta);
}

PolicyLearner PolicyLearner::load(const std::string& path) {
  std::map<std::string, std::string> meta;
  ParameterSet set = load_checkpoint(path, &meta);
  PolicyLearnerConfig cfg;
  const std::string algo = meta.at("algo");
  cfg.centralized = algo != "ppo";
  cfg.state_critic = algo == "mappo_state";
  cfg.n_agents = std::stoi(meta.at("n_agents"));
  cfg.n_actions = std::stoi(meta.at("n_actions"));
  cfg.obs_size = std::stoi(meta.at("obs_size"));
  cfg.spawn_action = std::stoi(meta.at("spawn_action"));
  cfg.critic_input = std::stoi(meta.at("critic_input"));
  cfg.gamma = std::stod(meta.at("gamma"));
  cfg.lam = std::stod(meta.at("lam"));
  cfg.actor = NetworkSpec::from_json(meta.at("actor"));
  if (cfg.centralized) cfg.critic = NetworkSpec::from_json(meta.at("critic"));
  Rng rng(0);
  PolicyLearner learner(cfg, rng);
  learner.params_ = std::move(set);
  return learner;
}

}  // namespace fluidrl
