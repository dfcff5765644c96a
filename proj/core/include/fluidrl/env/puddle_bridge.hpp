#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fluidrl/common/config.hpp"
#include "fluidrl/common/rng.hpp"
#include "fluidrl/core/env.hpp"

namespace fluidrl {

// 8x8 coordination gridworld. Agents start on a spawn cell and must reach
// the goal behind a wall barrier. A gate cell in the barrier is open or
// closed for the whole episode (Bernoulli draw at reset). Puddle cells hold
// up to two agents as a stack; only the top of a 2-stack may move from
// puddle to puddle, which is what makes the closed-gate route a two-agent
// bridge maneuver.
//
// Rules, applied in ascending id:
//  - An agent that is the bottom of a 2-stack at step start is locked for
//    the whole step: moves are no-ops, spawning still works.
//  - Land-like cells (land, spawn, goal, open gate) hold one agent.
//  - A puddle is enterable while its occupancy is < 2; entering an occupied
//    puddle makes the mover the top. Leaving a puddle is unrestricted for
//    the top; a lone occupant may leave to land but never puddle to puddle.
//  - Spawn places the child on the spawn cell iff that cell is free.
// Reaching the goal ends the episode; the +10 team reward, the per-spawn
// cost and the step cost are all accounted over the agents alive at step
// start (the goal share of an agent spawned the same step is zero).
class PuddleBridgeEnv : public FluidEnv {
 public:
  enum Action { kNone = 0, kNorth, kSouth, kWest, kEast, kSpawn, kDummy };
  enum Tile { kLand = 0, kWall, kGate, kPuddle, kSpawnCell, kGoal };

  // Keys: map (rows '/' separated; legend . # G ~ S F), map_file, c_spawn,
  // c_step, max_agents, initial_agents, horizon, gate_prob.
  explicit PuddleBridgeEnv(const Config& cfg);

  static const char* builtin_map();

  int max_agents() const override { return max_agents_; }
  int num_actions() const override { return 7; }
  int observation_size() const override {
    return kCells * 7 + n_puddles() + 2 + 1 + max_agents_ * 6 + 1;
  }

  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(const JointAction& actions) override;

  const PopulationState& population() const override { return pop_; }
  std::string state_digest() const override;

  void set_episode_ceiling(int ceiling) override { ceiling_override_ = ceiling; }
  void set_initial_agents(int count) override { initial_override_ = count; }

  bool gate_open() const { return gate_open_; }
  std::pair<int, int> spawn_cell() const { return from_index(spawn_idx_); }
  std::pair<int, int> goal_cell() const { return from_index(goal_idx_); }
  const std::vector<int>& puddle_indices() const { return puddle_idx_; }
  int n_puddles() const { return static_cast<int>(puddle_idx_.size()); }
  std::pair<int, int> agent_pos(AgentId id) const {
    return {pos_r_[id], pos_c_[id]};
  }
  AgentId base_at(int r, int c) const { return base_[r * kSide + c]; }
  AgentId top_at(int r, int c) const { return top_[r * kSide + c]; }
  Tile tile_at(int r, int c) const { return tiles_[r * kSide + c]; }
  // The parsed map, one row per line, original legend.
  std::string map_text() const { return map_text_; }
  std::string render() const;

  static constexpr int kSide = 8;
  static constexpr int kCells = kSide * kSide;

 private:
  static std::pair<int, int> from_index(int i) {
    return {i / kSide, i % kSide};
  }
  bool in_bounds(int r, int c) const {
    return r >= 0 && r < kSide && c >= 0 && c < kSide;
  }
  bool passable(Tile t) const {
    if (t == kWall) return false;
    if (t == kGate) return gate_open_;
    return true;
  }
  void leave_cell(AgentId id);
  std::vector<double> all_obs() const;
  void observe(AgentId id, double* out) const;

  // config / map
  std::string map_text_;
  std::vector<Tile> tiles_;
  int spawn_idx_ = -1, goal_idx_ = -1;
  std::vector<int> puddle_idx_;
  std::vector<int> spawn_adj_;
  int max_agents_;
  int initial_agents_;
  double c_spawn_, c_step_;
  int horizon_;
  double gate_prob_;

  // episode state
  PopulationState pop_;
  std::vector<AgentId> base_, top_;
  std::vector<int> pos_r_, pos_c_;
  JointAction prev_actions_;
  bool gate_open_ = false;
  int step_count_ = 0;
  Rng rng_;
  int ceiling_override_ = -1;
  int initial_override_ = -1;
};

}  // namespace fluidrl
