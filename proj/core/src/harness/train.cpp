#include "fluidrl/harness/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <json.hpp>

#include "fluidrl/common/rng.hpp"
#include "fluidrl/env/lbf.hpp"
#include "fluidrl/env/predator_prey.hpp"
#include "fluidrl/env/registry.hpp"
#include "fluidrl/harness/metrics.hpp"
#include "fluidrl/learn/arch.hpp"
#include "fluidrl/learn/curriculum.hpp"
#include "fluidrl/learn/ppo.hpp"
#include "fluidrl/learn/qlearner.hpp"
#include "fluidrl/learn/schedule.hpp"

namespace fluidrl {

namespace {

namespace fs = std::filesystem;

double vec_mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double vec_std(const std::vector<double>& v, double m) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::string ckpt_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ckpt_%04d.bin", index);
  return buf;
}

// Step count at which checkpoint k of c is due; the last one lands on
// total exactly.
long long ckpt_threshold(long long total, int k, int c) {
  return (total * k + c - 1) / c;
}

void fill_alive(const FluidEnv& env, std::uint8_t* row) {
  const PopulationState& pop = env.population();
  for (int i = 0; i < env.max_agents(); ++i)
    row[i] = pop.is_alive(i + 1) ? 1 : 0;
}

// Either kind of learner behind one save/update facade.
struct Trainer {
  std::unique_ptr<ValueLearner> value;
  std::unique_ptr<PolicyLearner> policy;

  void save(const std::string& path,
            const std::map<std::string, std::string>& meta) const {
    if (value)
      value->save(path, meta);
    else
      policy->save(path, meta);
  }
};

struct RunState {
  std::vector<double> window_returns;
  std::vector<double> window_alive;
  double last_loss = 0.0;
  double last_grad_norm = 0.0;
  double last_lr = 0.0;
};

void write_run_info(const std::string& run_dir, const Config& cfg,
                    const Config& env_cfg, const std::string& run_id,
                    std::uint64_t seed, long long total_steps,
                    const std::string& status, const TrainResult& result) {
  nlohmann::json j;
  j["schema"] = 1;
  j["run_id"] = run_id;
  j["preset"] = cfg.get_str("preset", "");
  j["algo"] = cfg.get_str("algo");
  j["seed"] = seed;
  j["total_steps"] = total_steps;
  j["n_envs"] = cfg.get_int("n_envs", 64);
  j["checkpoints"] = cfg.get_int("checkpoints", 100);
  j["env"] = env_cfg.get_str("env");
  j["env_config"] = env_cfg.serialize();
  j["status"] = status;
  j["env_steps"] = result.env_steps;
  j["updates"] = result.updates;
  j["episodes"] = result.episodes;
  j["checkpoints_written"] = static_cast<int>(result.checkpoint_paths.size());
  if (!result.abort_reason.empty()) j["abort_reason"] = result.abort_reason;
  std::ofstream out(run_dir + "/run_info.json");
  if (!out) throw std::runtime_error("train: cannot write " + run_dir + "/run_info.json");
  out << j.dump(2) << "\n";
}

}  // namespace

const std::vector<std::string>& train_config_keys() {
  static const std::vector<std::string> keys = {
      "preset", "run_id", "algo", "env", "seed", "total_steps", "n_envs",
      "checkpoints", "out", "curriculum",
      // value learners
      "share", "lr_init", "lr_min", "gamma", "max_grad_norm", "target_period",
      "batch_size", "replay_capacity", "min_replay", "replay_ratio",
      "eps_greedy", "max_eps_spawn",
      // policy learners
      "rollout_steps", "lam", "clip", "vloss_coef", "ent_coef", "epochs",
      "minibatches",
  };
  return keys;
}

TrainResult train_run(const Config& cfg) {
  // Key validation first: nothing is created for a misspelled option.
  Config trainer_keys;
  Config env_cfg;
  for (const auto& [k, v] : cfg.items()) {
    if (k.rfind("env.", 0) == 0)
      env_cfg.set(k.substr(4), v);
    else
      trainer_keys.set(k, v);
  }
  trainer_keys.validate_keys(train_config_keys());
  env_cfg.set("env", cfg.get_str("env"));

  const Algo algo = parse_algo(cfg.get_str("algo"));
  const std::uint64_t seed =
      static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  const long long total_steps = cfg.get_int("total_steps", 0);
  const int n_envs = cfg.get_int("n_envs", 64);
  const int n_ckpt = cfg.get_int("checkpoints", 100);
  const bool use_curriculum = cfg.get_bool("curriculum", true);
  if (total_steps < 0) throw std::runtime_error("train: total_steps must be >= 0");
  if (n_envs < 1) throw std::runtime_error("train: n_envs must be >= 1");
  if (n_ckpt < 1) throw std::runtime_error("train: checkpoints must be >= 1");

  // Environment construction validates the env.* block.
  std::vector<std::unique_ptr<FluidEnv>> envs;
  envs.reserve(n_envs);
  for (int e = 0; e < n_envs; ++e) envs.push_back(make_env(env_cfg));
  FluidEnv& probe = *envs[0];
  const int A = probe.max_agents();
  const int S = probe.observation_size();
  const int n_actions = probe.num_actions();

  Rng init_rng(seed);
  Rng env_rng(seed + 1000003);
  Rng act_rng(seed + 2000003);
  Rng upd_rng(seed + 3000003);

  Trainer trainer;
  double eps_greedy = 0.0;
  double max_eps_spawn = 0.0;
  int replay_ratio = 1;
  if (is_value_based(algo)) {
    ValueLearnerConfig vc;
    vc.net = agent_net_spec(probe, algo);
    vc.vdn = algo == Algo::kVdn;
    vc.share = cfg.get_bool("share", true);
    vc.n_agents = A;
    vc.n_actions = n_actions;
    vc.obs_size = S;
    vc.spawn_action = probe.spawn_action();
    vc.gamma = cfg.get_double("gamma", 0.99);
    vc.lr_init = cfg.get_double("lr_init", 1e-3);
    vc.lr_min = cfg.get_double("lr_min", 1e-4);
    vc.max_grad_norm = cfg.get_double("max_grad_norm", 1.0);
    vc.target_period = cfg.get_int("target_period", 100);
    vc.batch_size = cfg.get_int("batch_size", 128);
    vc.replay_capacity = cfg.get_int("replay_capacity", 4096);
    vc.min_replay = cfg.get_int("min_replay", 512);
    vc.eps_greedy = cfg.get_double("eps_greedy", 0.1);
    vc.max_eps_spawn = cfg.get_double("max_eps_spawn", 0.1);
    eps_greedy = vc.eps_greedy;
    max_eps_spawn = vc.max_eps_spawn;
    replay_ratio = cfg.get_int("replay_ratio", 1);
    if (replay_ratio < 1) throw std::runtime_error("train: replay_ratio must be >= 1");
    trainer.value = std::make_unique<ValueLearner>(vc, init_rng);
  } else {
    PolicyLearnerConfig pc;
    pc.actor = agent_net_spec(probe, algo);
    pc.centralized = algo != Algo::kPpo;
    pc.state_critic = algo == Algo::kMappoState;
    if (pc.centralized) {
      pc.critic = critic_net_spec(probe, algo);
      pc.critic_input = pc.critic.input_size();
    }
    pc.n_agents = A;
    pc.n_actions = n_actions;
    pc.obs_size = S;
    pc.spawn_action = probe.spawn_action();
    pc.rollout_steps = cfg.get_int("rollout_steps", 20);
    pc.gamma = cfg.get_double("gamma", 0.99);
    pc.lam = cfg.get_double("lam", 0.9);
    pc.lr_init = cfg.get_double("lr_init", 1e-4);
    pc.lr_min = cfg.get_double("lr_min", pc.lr_init);
    pc.clip = cfg.get_double("clip", 0.2);
    pc.vloss_coef = cfg.get_double("vloss_coef", 0.5);
    pc.ent_coef = cfg.get_double("ent_coef", 0.05);
    pc.epochs = cfg.get_int("epochs", 5);
    pc.minibatches = cfg.get_int("minibatches", 20);
    pc.max_grad_norm = cfg.get_double("max_grad_norm", 0.5);
    trainer.policy = std::make_unique<PolicyLearner>(pc, init_rng);
  }

  const std::string run_id =
      cfg.get_str("run_id", cfg.get_str("preset", "run") + "_s" + std::to_string(seed));
  const std::string out_root = cfg.get_str("out", "runs");
  const std::string run_dir = out_root + "/" + run_id;
  if (fs::exists(run_dir + "/metrics.csv"))
    throw std::runtime_error("train: " + run_dir + "/metrics.csv already exists");
  fs::create_directories(run_dir);

  TrainResult result;
  result.run_dir = run_dir;
  write_run_info(run_dir, cfg, env_cfg, run_id, seed, total_steps, "running",
                 result);
  MetricsWriter metrics(run_dir + "/metrics.csv");

  RunState rs;
  long long steps_done = 0;
  long long episodes = 0;
  long long updates = 0;

  auto save_ckpt = [&](int index) {
    std::map<std::string, std::string> meta;
    meta["env_config"] = env_cfg.serialize();
    meta["run_id"] = run_id;
    meta["seed"] = std::to_string(seed);
    meta["env_steps"] = std::to_string(steps_done);
    meta["checkpoint"] = std::to_string(index);
    const std::string path = run_dir + "/" + ckpt_name(index);
    trainer.save(path, meta);
    result.checkpoint_paths.push_back(path);

    MetricRow row;
    row.run_id = run_id;
    row.seed = seed;
    row.checkpoint = index;
    row.env_steps = steps_done;
    row.joint_return_mean = vec_mean(rs.window_returns);
    row.joint_return_std = vec_std(rs.window_returns, row.joint_return_mean);
    row.alive_mean = vec_mean(rs.window_alive);
    nlohmann::json extra;
    extra["episodes"] = rs.window_returns.size();
    extra["loss"] = rs.last_loss;
    extra["grad_norm"] = rs.last_grad_norm;
    extra["lr"] = rs.last_lr;
    extra["updates"] = updates;
    row.extra = extra.dump();
    metrics.append(row);
    rs.window_returns.clear();
    rs.window_alive.clear();
  };

  if (total_steps == 0) {
    save_ckpt(0);
    write_run_info(run_dir, cfg, env_cfg, run_id, seed, total_steps, "ok",
                   result);
    return result;
  }

  // Curriculum bounds: ceiling over 1..cap, roster over 1..ceiling, levels
  // capped by the configured starting roster.
  const int level_cap = [&]() {
    if (auto* lbf = dynamic_cast<const LbfEnv*>(&probe))
      return lbf->max_initial_level();
    return 0;
  }();

  std::vector<double> obs(static_cast<std::size_t>(n_envs) * A * S);
  std::vector<std::uint8_t> alive(static_cast<std::size_t>(n_envs) * A);
  std::vector<int> actions(static_cast<std::size_t>(n_envs) * A);
  std::vector<double> ep_return(n_envs, 0.0);

  auto reset_env = [&](int e) {
    for (int attempt = 0;; ++attempt) {
      if (use_curriculum) {
        PopulationSample ps = sample_population(A, A, level_cap, env_rng);
        apply_population_sample(*envs[e], ps);
      }
      try {
        std::vector<double> o = envs[e]->reset(env_rng.next_u64());
        std::copy(o.begin(), o.end(),
                  obs.begin() + static_cast<std::size_t>(e) * A * S);
        break;
      } catch (const std::exception&) {
        // Sampled roster the map cannot place; redraw a few times.
        if (attempt >= 19) throw;
      }
    }
    fill_alive(*envs[e], alive.data() + static_cast<std::size_t>(e) * A);
    ep_return[e] = 0.0;
  };
  for (int e = 0; e < n_envs; ++e) reset_env(e);

  int next_ckpt = 1;
  auto flush_ckpts = [&]() {
    while (next_ckpt <= n_ckpt &&
           steps_done >= ckpt_threshold(total_steps, next_ckpt, n_ckpt))
      save_ckpt(next_ckpt++);
  };
  auto abort_run = [&](const std::string& why) {
    result.aborted = true;
    result.abort_reason = why;
  };

  const bool centralized =
      trainer.policy && trainer.policy->config().centralized;
  const bool state_critic =
      trainer.policy && trainer.policy->config().state_critic;
  const int critic_input =
      trainer.policy ? trainer.policy->config().critic_input : 0;
  const int spatial = obs_spatial_size(probe);
  std::vector<double> critic_in;
  if (centralized)
    critic_in.resize(static_cast<std::size_t>(n_envs) * critic_input);
  auto build_critic_rows = [&]() {
    if (!centralized) return;
    for (int e = 0; e < n_envs; ++e) {
      double* row = critic_in.data() + static_cast<std::size_t>(e) * critic_input;
      if (state_critic) {
        auto* pp = dynamic_cast<const PredatorPreyEnv*>(envs[e].get());
        std::vector<double> st = pp->global_state();
        std::copy(st.begin(), st.end(), row);
      } else {
        build_critic_input_concat(
            obs.data() + static_cast<std::size_t>(e) * A * S, A, S, spatial,
            row);
      }
    }
  };

  // One environment transition for env e: steps it, accounts the episode,
  // and swaps in the next observation (resetting on done). Returns the
  // StepResult fields the caller still needs.
  std::vector<double> step_rewards(static_cast<std::size_t>(n_envs) * A);
  std::vector<std::uint8_t> step_done(n_envs);
  JointAction joint(A);
  auto step_one = [&](int e, bool push_replay) {
    const std::size_t ob = static_cast<std::size_t>(e) * A * S;
    const std::size_t ab = static_cast<std::size_t>(e) * A;
    std::copy(actions.begin() + ab, actions.begin() + ab + A, joint.begin());
    StepResult sr = envs[e]->step(joint);

    if (push_replay) {
      ReplayItem item;
      item.obs.assign(obs.begin() + ob, obs.begin() + ob + A * S);
      item.obs_next.assign(sr.obs.begin(), sr.obs.end());
      item.actions.assign(joint.begin(), joint.end());
      item.rewards = sr.rewards;
      item.alive.assign(alive.begin() + ab, alive.begin() + ab + A);
      item.alive_next.resize(A);
      fill_alive(*envs[e], item.alive_next.data());
      item.done = sr.done;
      trainer.value->push(std::move(item));
    }

    double r = 0.0;
    for (double x : sr.rewards) r += x;
    ep_return[e] += r;
    std::copy(sr.rewards.begin(), sr.rewards.end(),
              step_rewards.begin() + ab);
    step_done[e] = sr.done ? 1 : 0;

    if (sr.done) {
      rs.window_returns.push_back(ep_return[e]);
      rs.window_alive.push_back(envs[e]->population().alive_count());
      ++episodes;
      reset_env(e);
    } else {
      std::copy(sr.obs.begin(), sr.obs.end(), obs.begin() + ob);
      fill_alive(*envs[e], alive.data() + ab);
    }
  };

  if (trainer.value) {
    while (steps_done < total_steps && !result.aborted) {
      const double eps_sp =
          spawn_eps_schedule(steps_done, total_steps, max_eps_spawn);
      trainer.value->select_actions(n_envs, obs.data(), alive.data(),
                                    eps_greedy, eps_sp, act_rng,
                                    actions.data());
      for (int e = 0; e < n_envs; ++e) step_one(e, /*push_replay=*/true);
      steps_done += n_envs;

      if (trainer.value->can_update()) {
        const double progress =
            static_cast<double>(steps_done) / static_cast<double>(total_steps);
        for (int u = 0; u < replay_ratio; ++u) {
          UpdateStats st = trainer.value->update(upd_rng, progress);
          ++updates;
          rs.last_loss = st.loss;
          rs.last_grad_norm = st.grad_norm;
          rs.last_lr = st.lr;
          if (!std::isfinite(st.loss)) {
            abort_run("non-finite loss at update " + std::to_string(updates));
            break;
          }
        }
      }
      if (!result.aborted) flush_ckpts();
    }
  } else {
    while (steps_done < total_steps && !result.aborted) {
      while (!trainer.policy->rollout_full()) {
        build_critic_rows();
        trainer.policy->act(n_envs, obs.data(), alive.data(),
                            centralized ? critic_in.data() : nullptr, act_rng,
                            actions.data());
        for (int e = 0; e < n_envs; ++e) step_one(e, /*push_replay=*/false);
        trainer.policy->record(n_envs, step_rewards.data(), step_done.data());
        steps_done += n_envs;
      }
      build_critic_rows();
      const double progress =
          static_cast<double>(steps_done) / static_cast<double>(total_steps);
      PolicyUpdateStats st = trainer.policy->update(
          n_envs, obs.data(), alive.data(),
          centralized ? critic_in.data() : nullptr, upd_rng, progress);
      ++updates;
      rs.last_loss = st.loss;
      rs.last_grad_norm = st.grad_norm;
      rs.last_lr = st.lr;
      if (!std::isfinite(st.loss)) {
        abort_run("non-finite loss at update " + std::to_string(updates));
        break;
      }
      flush_ckpts();
    }
  }

  result.env_steps = steps_done;
  result.updates = updates;
  result.episodes = episodes;
  write_run_info(run_dir, cfg, env_cfg, run_id, seed, total_steps,
                 result.aborted ? "aborted" : "ok", result);
  return result;
}

}  // namespace fluidrl
