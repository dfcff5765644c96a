#pragma once

#include "fluidrl/common/rng.hpp"

namespace fluidrl {

// Epsilon-greedy with a dedicated spawn probability inside the random
// branch: with probability 1-eps the argmax action (ties to the lowest
// index), otherwise spawn with probability eps_spawn and each remaining
// action with probability (1-eps_spawn)/(n_actions-1).
inline int select_action_eps_greedy(const double* q, int n_actions,
                                    int spawn_action, double eps,
                                    double eps_spawn, Rng& rng) {
  if (eps <= 0.0 || rng.uniform() >= eps) {
    int best = 0;
    for (int a = 1; a < n_actions; ++a)
      if (q[a] > q[best]) best = a;
    return best;
  }
  if (rng.uniform() < eps_spawn) return spawn_action;
  int pick = rng.uniform_int(0, n_actions - 2);
  return pick >= spawn_action ? pick + 1 : pick;
}

}  // namespace fluidrl
