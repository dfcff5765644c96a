#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fluidrl/common/config.hpp"
#include "fluidrl/common/rng.hpp"
#include "fluidrl/core/env.hpp"

namespace fluidrl {

// Grid-world pursuit game with a growable predator team. Preys are part of
// the environment, not agents; a prey is captured when at least two distinct
// predators sit orthogonally adjacent to it. Every cell holds at most one
// entity.
//
// Per-step phase order: predator moves (ascending id, target must be empty
// at resolution time), spawns, captures, prey moves (prey-index order),
// rewards. The reward of every agent alive at the start of the step is
//   payoff - (c_spawn * spawns / |L| + c_step)
// where |L| is the pre-step alive count and payoff is either
// P * captures ("scp", size-constant) or P * captures / |L| ("sip",
// size-inverse). Agents spawned this step receive 0.
class PredatorPreyEnv : public FluidEnv {
 public:
  // Actions. The trailing dummy slot is the forced action of dead agents.
  enum Action { kNorth = 0, kSouth, kWest, kEast, kNone, kSpawn, kDummy };

  // Keys: grid_size, n_prey, prey_choices (overrides n_prey with a uniform
  // draw from the list each episode), max_agents, initial_agents,
  // prey_capture_reward, c_spawn, c_step, payoff (scp|sip), horizon, layout.
  //
  // `layout` pins the starting board instead of random placement: rows
  // separated by '/', '.' empty, digits 1..9 predators (ids must be 1..k),
  // 'x' prey. Example: "..x../.1.2./....."
  explicit PredatorPreyEnv(const Config& cfg);

  int max_agents() const override { return max_agents_; }
  int num_actions() const override { return 7; }
  int observation_size() const override;

  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(const JointAction& actions) override;

  const PopulationState& population() const override { return pop_; }
  std::string state_digest() const override;

  void set_episode_ceiling(int ceiling) override { ceiling_override_ = ceiling; }
  void set_initial_agents(int count) override { initial_override_ = count; }

  // Reward of one pre-step-alive agent, exposed for direct formula checks.
  // `sip` selects the size-inverse payoff; alive_count is |L| pre-step.
  static double agent_reward(bool sip, double P, double c_spawn,
                             double c_step, int alive_count, int captures,
                             int spawns);

  // Centralized critic input: predator and prey occupancy planes, then
  // alive count, preys alive, episode ceiling, then per-slot children
  // counts, all normalized like the observation scalars.
  std::vector<double> global_state() const;
  int global_state_size() const { return 2 * grid_ * grid_ + 3 + max_agents_; }

  int preys_alive() const;
  std::vector<std::pair<int, int>> prey_positions() const;
  int grid_size() const { return grid_; }
  std::string render() const;

  // Raw prey move draw before any blocking rules: 0 stay (p = 0.3),
  // 1..4 = N/S/W/E (p = 0.175 each).
  static int sample_prey_move(Rng& rng);

  static constexpr int kWindow = 11;  // egocentric view, radius 5

 private:
  struct Prey {
    int r = 0, c = 0;
    bool alive = false;
  };

  bool in_bounds(int r, int c) const {
    return r >= 0 && r < grid_ && c >= 0 && c < grid_;
  }
  // Occupancy index: 0 empty, >0 predator id, <0 ~(prey index).
  int& cell(int r, int c) { return occ_[r * grid_ + c]; }
  int cell(int r, int c) const { return occ_[r * grid_ + c]; }
  bool place_random_empty(int code, int* out_r, int* out_c);
  bool adjacent_to_predator(int r, int c) const;
  int distinct_adjacent_predators(int r, int c) const;
  void observe(AgentId id, double* out) const;
  std::vector<double> all_obs() const;

  struct LayoutCell {
    int r, c, code;  // code: >0 predator id, <0 prey
  };

  // config
  int grid_;
  int n_prey_;
  std::vector<int> prey_choices_;
  std::vector<LayoutCell> layout_;
  int layout_preds_ = 0, layout_preys_ = 0;
  int max_agents_;
  int initial_agents_;
  double P_, c_spawn_, c_step_;
  bool sip_;
  int horizon_;

  // episode state
  PopulationState pop_;
  std::vector<int> occ_;
  std::vector<int> pred_r_, pred_c_;
  std::vector<Prey> preys_;
  JointAction prev_actions_;
  int step_count_ = 0;
  int max_preys_ = 1;  // normalization constant for the prey-count scalar
  Rng rng_;
  int ceiling_override_ = -1;
  int initial_override_ = -1;
};

}  // namespace fluidrl
