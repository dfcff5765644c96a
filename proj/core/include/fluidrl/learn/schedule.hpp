#pragma once

#include <algorithm>

namespace fluidrl {

// Linear interpolation from v0 at progress 0 to v1 at progress 1, clamped.
inline double linear_schedule(double v0, double v1, double progress) {
  double f = std::clamp(progress, 0.0, 1.0);
  return v0 + (v1 - v0) * f;
}

// Spawn exploration probability ramps from zero to its maximum over the
// whole run.
inline double spawn_eps_schedule(long long step, long long total_steps,
                                 double max_eps_spawn) {
  if (total_steps <= 0) return max_eps_spawn;
  return max_eps_spawn * static_cast<double>(step) / static_cast<double>(total_steps);
}

}  // namespace fluidrl
