#pragma once

#include <string>

#include "fluidrl/core/env.hpp"
#include "fluidrl/nn/network.hpp"

namespace fluidrl {

enum class Algo { kIql, kVdn, kPpo, kMappo, kMappoState };

// Accepts "iql", "vdn", "ppo", "mappo", "mappo_state".
Algo parse_algo(const std::string& name);
const char* algo_name(Algo algo);

inline bool is_value_based(Algo a) {
  return a == Algo::kIql || a == Algo::kVdn;
}

// Default per-agent network for the environment: a dueling Q-net for value
// learners, an actor-critic for ppo, an actor-only net for the mappo
// variants (their value comes from the centralized critic).
NetworkSpec agent_net_spec(const FluidEnv& env, Algo algo);

// Centralized critic for mappo / mappo_state. Throws for other algorithms
// and for environments without a defined critic layout.
NetworkSpec critic_net_spec(const FluidEnv& env, Algo algo);

// Per-agent spatial prefix length of the observation (plane count times
// window area), 0 for fully flat layouts.
int obs_spatial_size(const FluidEnv& env);

// Packs max_agents observation rows into one critic input row: the spatial
// prefixes of all rows first (plane-major, giving the conv stack
// n_agents * planes input channels), then all flat tails. spatial is the
// per-row spatial prefix length, 0 for fully flat observations. Rows of
// dead agents are zero and stay zero blocks in the packed row.
void build_critic_input_concat(const double* obs, int n_agents, int obs_size,
                               int spatial, double* out);

}  // namespace fluidrl
