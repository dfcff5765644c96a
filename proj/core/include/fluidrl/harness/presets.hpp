#pragma once

#include <string>
#include <vector>

#include "fluidrl/common/config.hpp"

namespace fluidrl {

std::vector<std::string> preset_names();

// Full training configuration for a named preset; throws on unknown names
// listing the known ones. Budgets are sized for a single desktop core; the
// CLI can override steps, seed and output location.
Config preset_config(const std::string& name);

}  // namespace fluidrl
