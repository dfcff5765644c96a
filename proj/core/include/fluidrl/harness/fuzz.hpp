#pragma once

#include <cstdint>

#include "fluidrl/core/env.hpp"

namespace fluidrl {

struct FuzzStats {
  long long steps = 0;
  long long episodes = 0;
  long long spawns = 0;         // granted spawn requests
  long long denied_spawns = 0;  // requests at or above the episode cap
  int max_alive = 0;
};

// Drives the environment with random actions, spawn-heavy on purpose, under
// per-episode population ceilings sampled over the whole 1..max_agents
// range. Checks after every step that the population respects the cap, that
// spawns at the cap are no-ops, that pre-step-dead agents earn exactly zero
// and that post-step-dead agents observe all zeros. Throws on the first
// violation.
FuzzStats fuzz_env(FluidEnv& env, long long steps, std::uint64_t seed);

}  // namespace fluidrl
