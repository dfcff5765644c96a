#include "fluidrl/core/episode.hpp"

#include <stdexcept>
#include <string>

namespace fluidrl {

JointAction expand_actions(const PopulationState& pop,
                           const std::vector<int>& alive_actions, int dummy) {
  JointAction full(pop.max_agents(), dummy);
  std::vector<AgentId> ids = pop.alive_ids();
  if (ids.size() != alive_actions.size())
    throw std::runtime_error("expand_actions: got " +
                             std::to_string(alive_actions.size()) +
                             " actions for " + std::to_string(ids.size()) +
                             " alive agents");
  for (std::size_t k = 0; k < ids.size(); ++k)
    full[ids[k] - 1] = alive_actions[k];
  return full;
}

void validate_actions(const FluidEnv& env, const JointAction& actions,
                      int step_index) {
  const PopulationState& pop = env.population();
  if (static_cast<int>(actions.size()) != env.max_agents())
    throw std::runtime_error(
        "step " + std::to_string(step_index) + ": joint action has " +
        std::to_string(actions.size()) + " slots, expected " +
        std::to_string(env.max_agents()));
  int dummy = env.dummy_action();
  for (AgentId id = 1; id <= env.max_agents(); ++id) {
    int a = actions[id - 1];
    if (pop.is_alive(id)) {
      if (a < 0 || a >= env.num_actions())
        throw std::runtime_error("step " + std::to_string(step_index) +
                                 ": agent " + std::to_string(id) +
                                 " action " + std::to_string(a) +
                                 " out of range");
    } else if (a != dummy) {
      throw std::runtime_error("step " + std::to_string(step_index) +
                               ": dead agent " + std::to_string(id) +
                               " must take the dummy action, got " +
                               std::to_string(a));
    }
  }
}

namespace {

template <typename GetActions>
Trajectory drive(FluidEnv& env, std::uint64_t seed, GetActions get_actions,
                 int max_steps, bool collect_digests) {
  Trajectory traj;
  traj.rewards_sum.assign(env.max_agents(), 0.0);
  std::vector<double> obs = env.reset(seed);
  for (int t = 0; t < max_steps; ++t) {
    traj.alive.push_back(env.population().alive_ids());
    JointAction actions = get_actions(obs, env.population());
    validate_actions(env, actions, t);
    StepResult res = env.step(actions);
    for (int i = 0; i < env.max_agents(); ++i) {
      traj.rewards_sum[i] += res.rewards[i];
      traj.joint_return += res.rewards[i];
    }
    if (collect_digests) traj.digests.push_back(env.state_digest());
    ++traj.steps;
    obs = std::move(res.obs);
    if (res.done) {
      traj.done = true;
      break;
    }
  }
  return traj;
}

}  // namespace

Trajectory run_episode(FluidEnv& env, std::uint64_t seed,
                       const JointPolicy& policy, int max_steps,
                       bool collect_digests) {
  return drive(
      env, seed,
      [&](const std::vector<double>& obs, const PopulationState& pop) {
        return policy(obs, pop);
      },
      max_steps, collect_digests);
}

Trajectory run_episode_alive(FluidEnv& env, std::uint64_t seed,
                             const AlivePolicy& policy, int max_steps,
                             bool collect_digests) {
  int dummy = env.dummy_action();
  int obs_len = env.observation_size();
  return drive(
      env, seed,
      [&](const std::vector<double>& obs, const PopulationState& pop) {
        std::vector<AgentId> ids = pop.alive_ids();
        std::vector<double> alive_obs;
        alive_obs.reserve(ids.size() * obs_len);
        for (AgentId id : ids)
          alive_obs.insert(alive_obs.end(),
                           obs.begin() + (id - 1) * obs_len,
                           obs.begin() + id * obs_len);
        return expand_actions(pop, policy(ids, alive_obs), dummy);
      },
      max_steps, collect_digests);
}

}  // namespace fluidrl
