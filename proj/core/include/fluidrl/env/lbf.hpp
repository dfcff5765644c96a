#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "fluidrl/common/config.hpp"
#include "fluidrl/common/rng.hpp"
#include "fluidrl/core/env.hpp"

namespace fluidrl {

// Cooperative foraging on a fully observed grid. Foods and agents carry
// integer levels; a level-l food is collected when the orthogonally adjacent
// agents that play Load this step have levels summing to at least l, and the
// collectors split a reward of l in proportion to their levels. A spawned
// agent inherits its parent's level and lands on a uniformly random empty
// cell. Every cell holds at most one entity.
//
// Step order: moves (ascending id, empty target only), spawns, load
// adjudication, rewards (spawn cost split per capita over the pre-step alive
// set, step cost per alive agent).
class LbfEnv : public FluidEnv {
 public:
  enum Action { kNone = 0, kNorth, kSouth, kWest, kEast, kLoad, kSpawn,
                kDummy };

  // Keys: grid_size, food_levels (comma list, one food per entry),
  // agent_levels (comma list, one initial agent per entry), max_agents,
  // c_spawn, c_step, horizon, layout.
  //
  // `layout` pins starting cells: rows '/'-separated, '.' empty, digits
  // 1..9 agents (ids 1..k, levels from agent_levels), letters a..i foods of
  // level 1..9 (row-major food order; overrides food_levels).
  explicit LbfEnv(const Config& cfg);

  int max_agents() const override { return max_agents_; }
  int num_actions() const override { return 8; }
  // Per food (row, col, level); per agent slot (row, col, level, alive,
  // children, prev action); then episode ceiling and own id.
  static constexpr int observation_length(int n_foods, int n_agents) {
    return 3 * n_foods + 6 * n_agents + 2;
  }
  int observation_size() const override {
    return observation_length(n_foods_, max_agents_);
  }

  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(const JointAction& actions) override;

  const PopulationState& population() const override { return pop_; }
  std::string state_digest() const override;

  void set_episode_ceiling(int ceiling) override { ceiling_override_ = ceiling; }
  void set_initial_agents(int count) override;
  // Curriculum hook: initial roster for the next reset (count and levels).
  void set_initial_levels(const std::vector<int>& levels);

  int foods_alive() const;
  int initial_agent_count() const { return initial_count_; }
  int agent_level(AgentId id) const { return levels_[id - 1]; }
  // Levels of the agents spawned during this episode (id above the initial
  // roster), ascending id. Drives the team-composition report.
  std::vector<int> spawned_agent_levels() const;
  int max_level() const { return max_level_; }
  // Highest level in the configured starting roster, the cap for sampled
  // curriculum levels.
  int max_initial_level() const {
    int m = 1;
    for (int l : agent_levels_) m = std::max(m, l);
    return m;
  }
  int grid_size() const { return grid_; }
  std::string render() const;

 private:
  struct Food {
    int r = 0, c = 0, level = 0;
    bool alive = false;
  };

  bool in_bounds(int r, int c) const {
    return r >= 0 && r < grid_ && c >= 0 && c < grid_;
  }
  int& cell(int r, int c) { return occ_[r * grid_ + c]; }
  int cell(int r, int c) const { return occ_[r * grid_ + c]; }
  bool place_random_empty(int code, int* out_r, int* out_c);
  std::vector<double> all_obs() const;
  void observe(AgentId id, double* out) const;

  // config
  int grid_;
  std::vector<int> food_levels_;
  std::vector<int> agent_levels_;
  int n_foods_;
  int max_agents_;
  double c_spawn_, c_step_;
  int horizon_;
  int max_level_ = 1;
  struct LayoutCell {
    int r, c, code;  // >0 agent id, <0 ~(food index)
  };
  std::vector<LayoutCell> layout_;
  std::vector<int> layout_food_levels_;

  // episode state
  PopulationState pop_;
  std::vector<int> occ_;  // 0 empty, >0 agent id, <0 ~(food index)
  std::vector<int> agent_r_, agent_c_;
  std::vector<int> levels_;  // per slot, retained for dead slots
  std::vector<Food> foods_;
  JointAction prev_actions_;
  int step_count_ = 0;
  int initial_count_ = 0;
  Rng rng_;
  int ceiling_override_ = -1;
  std::vector<int> initial_levels_override_;
};

}  // namespace fluidrl
