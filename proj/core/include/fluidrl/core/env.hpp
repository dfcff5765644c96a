#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fluidrl/core/population.hpp"

namespace fluidrl {

// One action index per agent slot, length max_agents. Dead slots must carry
// the environment's dummy action; the transition ignores them.
using JointAction = std::vector<int>;

// Per-step event counters, used by metrics and tests.
struct StepInfo {
  int spawns = 0;
  int captures = 0;   // predator-prey: preys removed this step
  int loads = 0;      // foraging: foods consumed this step
  bool goal_reached = false;
};

struct StepResult {
  // Length max_agents. Slot i-1 is the reward of agent i; zero for agents
  // dead at the start of the step.
  std::vector<double> rewards;
  // Flattened observations, max_agents * observation_size. Rows of agents
  // dead after the transition are zero.
  std::vector<double> obs;
  bool done = false;
  StepInfo info;
};

// A stochastic game whose set of acting agents changes over the episode via
// spawn actions. Fixed slot count max_agents; the alive set starts from the
// initial population and can only grow (environments may also shrink it if
// their rules remove agents). All randomness flows through the seed given to
// reset(), so a (seed, action sequence) pair replays exactly.
class FluidEnv {
 public:
  virtual ~FluidEnv() = default;

  virtual int max_agents() const = 0;
  // Size of the per-agent action space, including the trailing dummy slot.
  virtual int num_actions() const = 0;
  // Index of the dummy action: the mandatory action of dead agents, and a
  // legal no-op for alive ones.
  int dummy_action() const { return num_actions() - 1; }
  // Index of the spawn action, by convention right before the dummy slot.
  int spawn_action() const { return num_actions() - 2; }
  virtual int observation_size() const = 0;

  // Starts a new episode. Returns the initial observation block, laid out
  // like StepResult::obs.
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(const JointAction& actions) = 0;

  virtual const PopulationState& population() const = 0;

  // Compact human-readable encoding of the full environment state, used by
  // replay-equivalence and determinism checks.
  virtual std::string state_digest() const = 0;

  // Overrides for population sampling (see curriculum). Must be called
  // before reset() of the episode they apply to; reset() consumes them.
  virtual void set_episode_ceiling(int ceiling) = 0;
  virtual void set_initial_agents(int count) = 0;
};

}  // namespace fluidrl
