#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fluidrl/core/env.hpp"

namespace fluidrl {

// Record of one finished episode. rewards_sum[i-1] accumulates agent i's
// rewards over every step (dead agents accumulate exactly zero).
struct Trajectory {
  int steps = 0;
  std::vector<double> rewards_sum;          // length max_agents
  std::vector<std::vector<AgentId>> alive;  // alive set before each step
  std::vector<std::string> digests;         // state digest after each step
  double joint_return = 0.0;                // sum over agents of rewards_sum
  bool done = false;
};

// Policy queried once per step with the current observation block and
// population; must return a full joint action (dummy in dead slots).
using JointPolicy = std::function<JointAction(
    const std::vector<double>& obs, const PopulationState& pop)>;

// Policy queried only for alive agents: receives ascending alive ids and
// per-agent observation rows, returns one action per alive agent in the same
// order. Dead slots are filled with the dummy action by the driver.
using AlivePolicy = std::function<std::vector<int>(
    const std::vector<AgentId>& ids, const std::vector<double>& obs)>;

// Expands alive-only actions to a full joint action over all slots.
JointAction expand_actions(const PopulationState& pop,
                           const std::vector<int>& alive_actions, int dummy);

// Throws if any alive agent's action is out of range or any dead agent's
// action is not the dummy. `step_index` names the offending step in the
// error message.
void validate_actions(const FluidEnv& env, const JointAction& actions,
                      int step_index);

// Runs one episode to completion (or max_steps), validating every joint
// action. collect_digests additionally records state_digest() after each
// step for replay comparisons.
Trajectory run_episode(FluidEnv& env, std::uint64_t seed,
                       const JointPolicy& policy, int max_steps,
                       bool collect_digests = false);

// Same episode driver but the policy only ever sees alive agents. With a
// matching seed and a policy that ignores dead slots, this produces the same
// trajectory as run_episode: dead agents are dummies with zero reward and no
// effect on the transition.
Trajectory run_episode_alive(FluidEnv& env, std::uint64_t seed,
                             const AlivePolicy& policy, int max_steps,
                             bool collect_digests = false);

}  // namespace fluidrl
