#include "fluidrl/env/registry.hpp"

#include <stdexcept>

#include "fluidrl/env/lbf.hpp"
#include "fluidrl/env/predator_prey.hpp"
#include "fluidrl/env/puddle_bridge.hpp"

namespace fluidrl {

std::unique_ptr<FluidEnv> make_env(const Config& cfg) {
  std::string name = cfg.get_str("env");
  if (name == "predator_prey") return std::make_unique<PredatorPreyEnv>(cfg);
  if (name == "lbf") return std::make_unique<LbfEnv>(cfg);
  if (name == "puddle_bridge") return std::make_unique<PuddleBridgeEnv>(cfg);
  throw std::runtime_error("unknown env '" + name + "'");
}

std::vector<std::string> env_names() {
  return {"predator_prey", "lbf", "puddle_bridge"};
}

}  // namespace fluidrl
