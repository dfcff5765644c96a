#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fluidrl/common/rng.hpp"
#include "fluidrl/nn/network.hpp"
#include "fluidrl/nn/params.hpp"

namespace fluidrl {

struct PolicyLearnerConfig {
  NetworkSpec actor;   // policy_value head, or policy head when centralized
  NetworkSpec critic;  // value head, centralized variants only
  bool centralized = false;
  bool state_critic = false;  // critic rows are the env global state, not
                              // concatenated observations
  int n_agents = 0;
  int n_actions = 0;
  int obs_size = 0;
  int spawn_action = 0;
  int critic_input = 0;  // centralized critic row width
  int rollout_steps = 20;
  double gamma = 0.99;
  double lam = 0.9;
  double lr_init = 1e-4;
  double lr_min = 1e-4;
  double clip = 0.2;
  double vloss_coef = 0.5;
  double ent_coef = 0.05;
  int epochs = 5;
  int minibatches = 20;
  double max_grad_norm = 0.5;
};

// On-policy transitions for one update, laid out [T][E][A] with A fixed
// agent slots per environment. Rows of dead agents carry zero logp/values
// and are excluded from every loss term.
struct RolloutBatch {
  int T = 0, E = 0, A = 0, S = 0, C = 0;
  std::vector<float> obs;        // [T][E][A][S]
  std::vector<float> critic_in;  // [T][E][C]
  std::vector<int> actions;      // [T][E][A]
  std::vector<float> logp;       // [T][E][A]
  std::vector<float> values;     // [T][E][A]
  std::vector<double> rewards;   // [T][E][A]
  std::vector<std::uint8_t> alive;  // [T][E][A], measured before the step
  std::vector<std::uint8_t> done;   // [T][E]

  void clear();
};

struct PolicyUpdateStats {
  double loss = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double grad_norm = 0.0;
  double lr = 0.0;
  int skipped_minibatches = 0;  // non-finite likelihood ratios
};

// Clipped-surrogate policy optimization over a fluid population. The actor
// (and the critic, when centralized) live in one ParameterSet under the
// prefixes "pi." and "vf."; advantages are normalized once per update over
// the alive rows.
class PolicyLearner {
 public:
  PolicyLearner(PolicyLearnerConfig cfg, Rng& init_rng);

  const PolicyLearnerConfig& config() const { return cfg_; }
  const ParameterSet& params() const { return params_; }
  ParameterSet& mutable_params() { return params_; }
  const RolloutBatch& rollout() const { return buf_; }

  // Samples one action per alive agent and records the step into the
  // rollout. obs is [n_envs][n_agents][obs_size]; critic_in is
  // [n_envs][critic_input] and required when centralized. Dead slots get
  // the dummy action.
  void act(int n_envs, const double* obs, const std::uint8_t* alive,
           const double* critic_in, Rng& rng, int* actions);

  // Argmax actions without recording, for evaluation. Ties go to the
  // lowest action index.
  void act_greedy(int n_envs, const double* obs, const std::uint8_t* alive,
                  int* actions) const;

  // Completes the pending act with its outcome.
  void record(int n_envs, const double* rewards, const std::uint8_t* done);

  bool rollout_full() const { return buf_.T >= cfg_.rollout_steps; }

  // Bootstraps from the post-rollout observation, computes advantages, and
  // runs the update epochs. Clears the rollout.
  PolicyUpdateStats update(int n_envs, const double* final_obs,
                           const std::uint8_t* final_alive,
                           const double* final_critic_in, Rng& rng,
                           double progress);

  void save(const std::string& path,
            const std::map<std::string, std::string>& extra_meta = {}) const;
  static PolicyLearner load(const std::string& path);

 private:
  void ensure_envs(int n_envs);
  // Value estimates for one step of observations, [n_envs][n_agents];
  // zero for dead slots.
  std::vector<double> step_values(int n_envs, const double* obs,
                                  const std::uint8_t* alive,
                                  const double* critic_in) const;

  PolicyLearnerConfig cfg_;
  ParameterSet params_;
  Adam opt_;
  RolloutBatch buf_;
  bool pending_ = false;
};

}  // namespace fluidrl
