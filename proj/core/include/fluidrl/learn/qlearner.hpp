#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fluidrl/common/rng.hpp"
#include "fluidrl/learn/replay.hpp"
#include "fluidrl/nn/network.hpp"
#include "fluidrl/nn/params.hpp"

namespace fluidrl {

struct ValueLearnerConfig {
  NetworkSpec net;
  bool vdn = false;    // joint TD on the summed Q, else independent per-agent
  bool share = true;   // one shared net vs one net per agent slot
  int n_agents = 0;
  int n_actions = 0;
  int obs_size = 0;
  int spawn_action = 0;
  double gamma = 0.99;
  double lr_init = 1e-3;
  double lr_min = 1e-4;
  double max_grad_norm = 1.0;
  int target_period = 100;  // updates between target net syncs
  int batch_size = 128;
  int replay_capacity = 10000;
  int min_replay = 1000;    // transitions required before updates start
  double eps_greedy = 0.1;
  double max_eps_spawn = 0.1;
};

struct UpdateStats {
  double loss = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
};

// Q-learning over a fluid population. All parameters, including the per-slot
// nets of the no-sharing mode, live in one ParameterSet; a frozen copy serves
// as the bootstrap target and is refreshed every target_period updates.
class ValueLearner {
 public:
  ValueLearner(ValueLearnerConfig cfg, Rng& init_rng);

  const ValueLearnerConfig& config() const { return cfg_; }
  const ParameterSet& params() const { return params_; }
  ParameterSet& mutable_params() { return params_; }
  const ParameterSet& target_params() const { return target_; }
  long long updates() const { return updates_; }

  // Epsilon-greedy actions for n_envs environments at once. obs is
  // [n_envs][n_agents][obs_size], alive [n_envs][n_agents]; actions gets
  // n_envs * n_agents entries, dead slots the dummy action. eps <= 0 is
  // pure greedy (ties to the lowest index) and draws nothing from rng.
  void select_actions(int n_envs, const double* obs, const std::uint8_t* alive,
                      double eps, double eps_spawn, Rng& rng,
                      int* actions) const;

  void push(ReplayItem item) { replay_.push(std::move(item)); }
  int replay_size() const { return static_cast<int>(replay_.size()); }
  bool can_update() const { return replay_size() >= cfg_.min_replay; }

  // One gradient step on a sampled minibatch. progress in [0,1] drives the
  // linear learning-rate decay.
  UpdateStats update(Rng& rng, double progress);

  void save(const std::string& path,
            const std::map<std::string, std::string>& extra_meta = {}) const;
  static ValueLearner load(const std::string& path);

 private:
  std::string prefix(int slot) const {
    return cfg_.share ? "q." : "a" + std::to_string(slot + 1) + ".";
  }
  int n_nets() const { return cfg_.share ? 1 : cfg_.n_agents; }

  ValueLearnerConfig cfg_;
  ParameterSet params_;
  ParameterSet target_;
  Adam opt_;
  ReplayBuffer replay_;
  long long updates_ = 0;
};

}  // namespace fluidrl
