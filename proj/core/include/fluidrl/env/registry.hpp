#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fluidrl/common/config.hpp"
#include "fluidrl/core/env.hpp"

namespace fluidrl {

// Constructs an environment from cfg["env"], one of "predator_prey",
// "lbf", "puddle_bridge".
std::unique_ptr<FluidEnv> make_env(const Config& cfg);

std::vector<std::string> env_names();

}  // namespace fluidrl
