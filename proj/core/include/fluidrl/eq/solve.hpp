#pragma once

#include "fluidrl/eq/tabular.hpp"

namespace fluidrl {

// Mixed equilibrium of a one-shot game with one or two players and up to
// four actions each. payoff[p][a0][a1] is player p's payoff when player 0
// plays a0 and player 1 plays a1; single-player games use a1 == 0.
// Candidates are enumerated over equal-size supports, smallest first and
// lexicographic within a size, so pure equilibria with the lowest action
// indices win ties. Throws if enumeration finds no candidate that passes
// the 1e-9 deviation check.
struct StageNash {
  std::vector<std::vector<double>> strategy;  // per player
  std::vector<double> value;                  // per player
};
StageNash stage_nash(const std::vector<std::vector<std::vector<double>>>& payoff);

// Stage-wise subgame perfect equilibrium on a finite-horizon game with at
// most two simultaneously alive agents per state. values[t][s][agent]
// includes the zero terminal layer at t == horizon.
struct SpneResult {
  BehavioralStrategy strategy;
  std::vector<std::vector<std::vector<double>>> values;
};
SpneResult backward_induction_spne(const TabularGame& game);

// Exact best-response check: holds everyone else fixed and solves each
// agent's induced decision problem, by backward induction for finite
// horizon and by value iteration to 1e-12 for stationary policies on
// infinite horizon. worst_gain is the largest improvement any agent can
// realize at any decision point; is_ne iff worst_gain <= tol.
struct NashVerdict {
  bool is_ne = false;
  double worst_gain = 0.0;
  int agent = 0;  // 1-based id, 0 when no gain found
  int stage = -1;
  int state = -1;
};
NashVerdict verify_nash(const TabularGame& game, const BehavioralStrategy& policy,
                        double tol);

// Turn-order expansion of a finite-horizon game: agents move in ascending
// id order within a stage, an agent's information set spans the unseen
// choices of earlier movers in the same stage, and the first mover of each
// stage occurrence has a singleton information set. Chance branches follow
// the declared transition distributions.
struct SequentialForm {
  struct Node {
    int stage;
    int state;
    int agent;  // 1-based id of the mover
    int info_set;
  };
  std::vector<Node> nodes;
  int n_leaves = 0;
  int depth = 0;  // most decision nodes on any root-to-leaf path
  int n_info_sets = 0;
};
SequentialForm sequentialize(const TabularGame& game);

}  // namespace fluidrl
