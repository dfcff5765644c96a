#include "fluidrl/learn/curriculum.hpp"

#include <algorithm>
#include <stdexcept>

#include "fluidrl/env/lbf.hpp"

namespace fluidrl {

PopulationSample sample_population(int true_ceiling, int max_initial,
                                   int level_cap, Rng& rng) {
  if (true_ceiling < 1) throw std::runtime_error("curriculum: ceiling must be >= 1");
  if (max_initial < 1) throw std::runtime_error("curriculum: max_initial must be >= 1");
  PopulationSample s;
  s.episode_ceiling = rng.uniform_int(1, true_ceiling);
  s.initial_agents = rng.uniform_int(1, std::min(s.episode_ceiling, max_initial));
  if (level_cap >= 1) {
    s.levels.resize(s.initial_agents);
    for (int& lv : s.levels) lv = rng.uniform_int(1, level_cap);
  }
  return s;
}

void apply_population_sample(FluidEnv& env, const PopulationSample& s) {
  env.set_episode_ceiling(s.episode_ceiling);
  if (!s.levels.empty()) {
    auto* lbf = dynamic_cast<LbfEnv*>(&env);
    if (!lbf) throw std::runtime_error("curriculum: levels given for a level-free env");
    lbf->set_initial_levels(s.levels);
  } else {
    env.set_initial_agents(s.initial_agents);
  }
}

}  // namespace fluidrl
