#pragma once

#include <vector>

#include "fluidrl/common/rng.hpp"
#include "fluidrl/core/env.hpp"

namespace fluidrl {

// Episode-start randomization for training: a population ceiling uniform in
// 1..true_ceiling, an initial roster uniform in 1..min(ceiling, max_initial),
// and, when level_cap >= 1, one level per starter uniform in 1..level_cap.
struct PopulationSample {
  int episode_ceiling = 1;
  int initial_agents = 1;
  std::vector<int> levels;  // empty unless levels are sampled
};

PopulationSample sample_population(int true_ceiling, int max_initial,
                                   int level_cap, Rng& rng);

// Pushes a sample into the environment ahead of reset. Evaluation uses the
// true ceiling and the configured roster instead (curriculum off).
void apply_population_sample(FluidEnv& env, const PopulationSample& s);

}  // namespace fluidrl
