#pragma once

#include <cstdint>
#include <vector>

namespace fluidrl {

// Generalized advantage estimates for one reward/value stream.
//   delta[t] = r[t] + gamma * (1 - done[t]) * v[t+1] - v[t]
//   adv[t]   = delta[t] + gamma * lambda * (1 - done[t]) * adv[t+1]
// values carries one trailing bootstrap entry (size T + 1); done[t] = 1
// truncates both the TD error and the recursion at an episode boundary.
std::vector<double> gae_advantages(const std::vector<double>& rewards,
                                   const std::vector<double>& values,
                                   const std::vector<std::uint8_t>& done,
                                   double gamma, double lambda);

}  // namespace fluidrl
