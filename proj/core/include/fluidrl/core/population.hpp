#pragma once

#include <functional>
#include <vector>

namespace fluidrl {

// Agents are identified by 1-based ids in 1..max_agents. Ordering by id is
// total and drives every deterministic resolution rule (movement, spawn
// order, stage-game sequencing).
using AgentId = int;

// Alive-set bookkeeping shared by all fluid environments. Environment
// specific per-agent attributes (level, position, ...) live in the
// environment state; a dead agent's attributes are retained but inert.
class PopulationState {
 public:
  PopulationState() = default;
  PopulationState(int max_agents, int ceiling)
      : alive_(max_agents, false), children_(max_agents, 0),
        ceiling_(ceiling) {}

  int max_agents() const { return static_cast<int>(alive_.size()); }
  int ceiling() const { return ceiling_; }
  void set_ceiling(int c) { ceiling_ = c; }

  bool is_alive(AgentId id) const { return alive_[id - 1]; }
  int alive_count() const { return alive_count_; }

  // Ascending ids of alive agents.
  std::vector<AgentId> alive_ids() const {
    std::vector<AgentId> out;
    out.reserve(alive_count_);
    for (int i = 0; i < max_agents(); ++i)
      if (alive_[i]) out.push_back(i + 1);
    return out;
  }

  int children_count(AgentId id) const { return children_[id - 1]; }

  void set_alive(AgentId id) {
    if (!alive_[id - 1]) {
      alive_[id - 1] = true;
      ++alive_count_;
    }
  }

  // Smallest id not currently alive, or 0 if all are alive.
  AgentId smallest_dead_id() const {
    for (int i = 0; i < max_agents(); ++i)
      if (!alive_[i]) return i + 1;
    return 0;
  }

  friend bool operator==(const PopulationState& a, const PopulationState& b) {
    return a.alive_ == b.alive_ && a.children_ == b.children_ &&
           a.ceiling_ == b.ceiling_;
  }

 private:
  friend int resolve_spawns(
      PopulationState&, const std::vector<AgentId>&,
      const std::function<bool(AgentId, AgentId)>&);

  std::vector<bool> alive_;
  std::vector<int> children_;
  int ceiling_ = 0;
  int alive_count_ = 0;
};

// Resolves spawn requests in ascending spawner id. Each request succeeds iff
// the population is below the episode ceiling; the new agent is the smallest
// dead id and the spawner's children count increments. A request at the cap
// is a no-op. `place` (optional) is the environment's placement hook for the
// new agent; if it returns false the spawn is rolled back and not counted.
// Returns the number of successful spawns.
int resolve_spawns(PopulationState& pop, const std::vector<AgentId>& spawners,
                   const std::function<bool(AgentId new_id, AgentId parent)>&
                       place = {});

}  // namespace fluidrl
