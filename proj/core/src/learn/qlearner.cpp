#include "fluidrl/learn/qlearner.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

#include "fluidrl/learn/explore.hpp"
#include "fluidrl/learn/schedule.hpp"

namespace fluidrl {

namespace {

std::string net_prefix(bool share, int slot) {
  return share ? "q." : "a" + std::to_string(slot + 1) + ".";
}

ParameterSet build_params(const ValueLearnerConfig& cfg, Rng& rng) {
  if (cfg.n_agents <= 0 || cfg.n_actions <= 0 || cfg.obs_size <= 0)
    throw std::runtime_error("value learner: bad dimensions");
  if (cfg.net.input_size() != cfg.obs_size)
    throw std::runtime_error("value learner: net input size " +
                             std::to_string(cfg.net.input_size()) +
                             " does not match observation size " +
                             std::to_string(cfg.obs_size));
  if (cfg.net.actions != cfg.n_actions)
    throw std::runtime_error("value learner: net action count mismatch");
  if (cfg.spawn_action < 0 || cfg.spawn_action >= cfg.n_actions)
    throw std::runtime_error("value learner: spawn action out of range");
  ParameterSet set;
  const int nets = cfg.share ? 1 : cfg.n_agents;
  for (int g = 0; g < nets; ++g)
    init_params(cfg.net, set, net_prefix(cfg.share, g), rng);
  return set;
}

double row_max(const Tensor& t, int row) {
  const int ncol = t.cols();
  double m = t.at(row, 0);
  for (int c = 1; c < ncol; ++c) m = std::max(m, t.at(row, c));
  return m;
}

}  // namespace

ValueLearner::ValueLearner(ValueLearnerConfig cfg, Rng& init_rng)
    : cfg_(std::move(cfg)),
      params_(build_params(cfg_, init_rng)),
      target_(params_),
      opt_(params_),
      replay_(cfg_.replay_capacity) {
  if (cfg_.min_replay < cfg_.batch_size) cfg_.min_replay = cfg_.batch_size;
}

void ValueLearner::select_actions(int n_envs, const double* obs,
                                  const std::uint8_t* alive, double eps,
                                  double eps_spawn, Rng& rng,
                                  int* actions) const {
  const int A = cfg_.n_agents, S = cfg_.obs_size, nact = cfg_.n_actions;
  std::vector<double> q(static_cast<std::size_t>(n_envs) * A * nact, 0.0);
  for (int g = 0; g < n_nets(); ++g) {
    std::vector<std::pair<int, int>> rows;
    for (int e = 0; e < n_envs; ++e)
      for (int i = 0; i < A; ++i) {
        if (!alive[static_cast<std::size_t>(e) * A + i]) continue;
        if (!cfg_.share && i != g) continue;
        rows.emplace_back(e, i);
      }
    if (rows.empty()) continue;
    Tensor x({static_cast<int>(rows.size()), S});
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double* src =
          obs + (static_cast<std::size_t>(rows[r].first) * A + rows[r].second) * S;
      std::copy(src, src + S, x.data.begin() + r * S);
    }
    Tensor out = net_eval(cfg_.net, params_, prefix(g), x);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      double* dst =
          q.data() +
          (static_cast<std::size_t>(rows[r].first) * A + rows[r].second) * nact;
      std::copy(out.data.begin() + r * nact, out.data.begin() + (r + 1) * nact,
                dst);
    }
  }
  // Exploration draws happen in (env, slot) order so the stream does not
  // depend on the sharing mode.
  for (int e = 0; e < n_envs; ++e)
    for (int i = 0; i < A; ++i) {
      const std::size_t k = static_cast<std::size_t>(e) * A + i;
      actions[k] = alive[k]
                       ? select_action_eps_greedy(q.data() + k * nact, nact,
                                                  cfg_.spawn_action, eps,
                                                  eps_spawn, rng)
                       : nact - 1;
    }
}

UpdateStats ValueLearner::update(Rng& rng, double progress) {
  if (!can_update())
    throw std::runtime_error("value learner: replay below min_replay");
  const int B = cfg_.batch_size, A = cfg_.n_agents, S = cfg_.obs_size;
  std::vector<const ReplayItem*> batch(B);
  for (int b = 0; b < B; ++b) batch[b] = &replay_.sample(rng);

  // Bootstrap values from the frozen copy: max over all actions, dummy
  // included, for every agent alive after the transition.
  std::vector<double> nxt(static_cast<std::size_t>(B) * A, 0.0);
  for (int g = 0; g < n_nets(); ++g) {
    std::vector<std::pair<int, int>> rows;
    for (int b = 0; b < B; ++b)
      for (int i = 0; i < A; ++i) {
        if (!batch[b]->alive_next[i]) continue;
        if (!cfg_.share && i != g) continue;
        rows.emplace_back(b, i);
      }
    if (rows.empty()) continue;
    Tensor x({static_cast<int>(rows.size()), S});
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const float* src =
          batch[rows[r].first]->obs_next.data() +
          static_cast<std::size_t>(rows[r].second) * S;
      std::copy(src, src + S, x.data.begin() + r * S);
    }
    Tensor out = net_eval(cfg_.net, target_, prefix(g), x);
    for (std::size_t r = 0; r < rows.size(); ++r)
      nxt[static_cast<std::size_t>(rows[r].first) * A + rows[r].second] =
          row_max(out, static_cast<int>(r));
  }

  Tape tape;
  BoundParams bound = bind(tape, params_);
  Var loss{};
  bool have_loss = false;

  if (cfg_.vdn) {
    std::vector<double> y(B);
    for (int b = 0; b < B; ++b) {
      const ReplayItem& it = *batch[b];
      double rsum = 0.0, boot = 0.0;
      for (int i = 0; i < A; ++i) {
        rsum += it.rewards[i];
        boot += nxt[static_cast<std::size_t>(b) * A + i];
      }
      y[b] = it.done ? rsum : rsum + cfg_.gamma * boot;
    }
    Var total = tape.value(Tensor({B}));
    for (int g = 0; g < n_nets(); ++g) {
      std::vector<std::pair<int, int>> rows;
      for (int b = 0; b < B; ++b)
        for (int i = 0; i < A; ++i) {
          if (!batch[b]->alive[i]) continue;
          if (!cfg_.share && i != g) continue;
          rows.emplace_back(b, i);
        }
      if (rows.empty()) continue;
      Tensor x({static_cast<int>(rows.size()), S});
      std::vector<int> taken(rows.size()), group(rows.size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const ReplayItem& it = *batch[rows[r].first];
        const float* src = it.obs.data() + static_cast<std::size_t>(rows[r].second) * S;
        std::copy(src, src + S, x.data.begin() + r * S);
        taken[r] = it.actions[rows[r].second];
        group[r] = rows[r].first;
      }
      NetOutput o = net_forward(tape, cfg_.net, bound, prefix(g),
                                x, true, &rng);
      Var qtaken = tape.gather_cols(o.out, taken);
      total = tape.add(total, tape.segment_sum(qtaken, group, B));
    }
    Var d = tape.sub(total, tape.value(Tensor({B}, std::move(y))));
    loss = tape.mean_all(tape.mul(d, d));
    have_loss = true;
  } else {
    int total_rows = 0;
    for (int b = 0; b < B; ++b)
      for (int i = 0; i < A; ++i)
        if (batch[b]->alive[i]) ++total_rows;
    for (int g = 0; g < n_nets(); ++g) {
      std::vector<std::pair<int, int>> rows;
      for (int b = 0; b < B; ++b)
        for (int i = 0; i < A; ++i) {
          if (!batch[b]->alive[i]) continue;
          if (!cfg_.share && i != g) continue;
          rows.emplace_back(b, i);
        }
      if (rows.empty()) continue;
      const int R = static_cast<int>(rows.size());
      Tensor x({R, S});
      std::vector<int> taken(R);
      std::vector<double> y(R);
      for (int r = 0; r < R; ++r) {
        const ReplayItem& it = *batch[rows[r].first];
        const int i = rows[r].second;
        const float* src = it.obs.data() + static_cast<std::size_t>(i) * S;
        std::copy(src, src + S, x.data.begin() + static_cast<std::size_t>(r) * S);
        taken[r] = it.actions[i];
        const double m = nxt[static_cast<std::size_t>(rows[r].first) * A + i];
        y[r] = (it.done || !it.alive_next[i]) ? it.rewards[i]
                                              : it.rewards[i] + cfg_.gamma * m;
      }
      NetOutput o = net_forward(tape, cfg_.net, bound, prefix(g),
                                x, true, &rng);
      Var d = tape.sub(tape.gather_cols(o.out, taken),
                       tape.value(Tensor({R}, std::move(y))));
      Var part = tape.scale(tape.mean_all(tape.mul(d, d)),
                            static_cast<double>(R) / total_rows);
      loss = have_loss ? tape.add(loss, part) : part;
      have_loss = true;
    }
  }
  if (!have_loss)
    throw std::runtime_error("value learner: batch holds no alive agents");

  tape.backward(loss);
  std::vector<Tensor> grads = collect_grads(tape, bound);
  const double gn = clip_global_norm(grads, cfg_.max_grad_norm);
  const double lr = linear_schedule(cfg_.lr_init, cfg_.lr_min, progress);
  opt_.step(params_, grads, lr);
  ++updates_;
  if (cfg_.target_period > 0 && updates_ % cfg_.target_period == 0)
    target_ = params_;
  return {tape.val(loss).data[0], gn, lr};
}

void ValueLearner::save(
    const std::string& path,
    const std::map<std::string, std::string>& extra_meta) const {
  std::map<std::string, std::string> meta = extra_meta;
  meta["algo"] = cfg_.vdn ? "vdn" : "iql";
  meta["share"] = cfg_.share ? "1" : "0";
  meta["n_agents"] = std::to_string(cfg_.n_agents);
  meta["n_actions"] = std::to_string(cfg_.n_actions);
  meta["obs_size"] = std::to_string(cfg_.obs_size);
  meta["spawn_action"] = std::to_string(cfg_.spawn_action);
  meta["gamma"] = std::to_string(cfg_.gamma);
  meta["net"] = cfg_.net.to_json();
  save_checkpoint(path, params_, meta);
}

ValueLearner ValueLearner::load(const std::string& path) {
  std::map<std::string, std::string> meta;
  ParameterSet set = load_checkpoint(path, &meta);
  ValueLearnerConfig cfg;
  cfg.net = NetworkSpec::from_json(meta.at("net"));
  cfg.vdn = meta.at("algo") == "vdn";
  cfg.share = meta.at("share") == "1";
  cfg.n_agents = std::stoi(meta.at("n_agents"));
  cfg.n_actions = std::stoi(meta.at("n_actions"));
  cfg.obs_size = std::stoi(meta.at("obs_size"));
  cfg.spawn_action = std::stoi(meta.at("spawn_action"));
  cfg.gamma = std::stod(meta.at("gamma"));
  Rng rng(0);
  ValueLearner learner(cfg, rng);
  learner.params_ = std::move(set);
  learner.target_ = learner.params_;
  return learner;
}

}  // namespace fluidrl
