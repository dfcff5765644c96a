#include "fluidrl/core/population.hpp"

#include <algorithm>
#include <stdexcept>

namespace fluidrl {

int resolve_spawns(PopulationState& pop, const std::vector<AgentId>& spawners,
                   const std::function<bool(AgentId, AgentId)>& place) {
  std::vector<AgentId> order = spawners;
  std::sort(order.begin(), order.end());
  int spawned = 0;
  for (AgentId parent : order) {
    if (parent < 1 || parent > pop.max_agents() || !pop.is_alive(parent))
      throw std::runtime_error("resolve_spawns: spawner " +
                               std::to_string(parent) + " is not alive");
    if (pop.alive_count() >= pop.ceiling()) continue;  // at cap: no-op
    AgentId child = pop.smallest_dead_id();
    if (place && !place(child, parent)) continue;  // placement failed
    pop.set_alive(child);
    ++pop.children_[parent - 1];
    ++spawned;
  }
  return spawned;
}

}  // namespace fluidrl
