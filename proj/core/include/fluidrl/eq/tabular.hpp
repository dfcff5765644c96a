#pragma once

#include <string>
#include <utility>
#include <vector>

namespace fluidrl {

// Fully observed finite fluid game in augmented fixed-population form:
// every agent slot exists in every state, dead slots hold a single dummy
// action and earn zero. Joint actions index only the alive agents' choices,
// least significant first in ascending agent id.
//
// Text format, one directive per line, '#' comments:
//   game <name>
//   agents <n>
//   gamma <g>
//   horizon <int|inf>
//   state <name> alive=<ids|-> actions=<counts|->
//   start <name>
//   t <state> <a per alive agent> -> <state>:<p> [<state>:<p> ...]
//   r <state> <a per alive agent> -> <reward per alive agent>
// States without any t line are absorbing; missing r lines mean zero.
struct TabularGame {
  struct State {
    std::string name;
    std::vector<int> alive;      // ascending ids, may be empty
    std::vector<int> n_actions;  // aligned with alive
    int n_joint = 1;
    bool absorbing = true;
    // per joint action
    std::vector<std::vector<std::pair<int, double>>> trans;
    std::vector<std::vector<double>> rewards;  // [joint][agent 0..n-1]
  };

  std::string name;
  int n_agents = 0;
  double gamma = 1.0;
  int horizon = -1;  // -1 = infinite
  int start = -1;
  std::vector<State> states;

  int state_index(const std::string& s) const;
  // Decomposes a joint index into per-alive-agent actions.
  std::vector<int> split_joint(int s, int joint) const;
  int join_actions(int s, const std::vector<int>& acts) const;

  static TabularGame parse(const std::string& text);
  static TabularGame load(const std::string& path);
};

// policy[state][k] is a distribution over the k-th alive agent's actions.
using StagePolicy = std::vector<std::vector<std::vector<double>>>;

// One StagePolicy per stage; a single stage means stationary.
struct BehavioralStrategy {
  std::vector<StagePolicy> stages;

  const StagePolicy& at_stage(int t) const {
    return stages.size() == 1 ? stages[0] : stages.at(t);
  }
};

StagePolicy uniform_stage_policy(const TabularGame& game);

// Probability of each joint action at state s under stage policy.
std::vector<double> joint_distribution(const TabularGame& game, int s,
                                       const std::vector<std::vector<double>>& dists);

// Finite-horizon per-agent values, values[t][s][agent 0..n-1]. The last
// entry values[horizon] is the zero terminal layer.
std::vector<std::vector<std::vector<double>>> policy_value(
    const TabularGame& game, const BehavioralStrategy& policy);

// Same numbers accumulated only over alive slots; equality with
// policy_value is the fixed-population embedding check.
std::vector<std::vector<std::vector<double>>> policy_value_fluid(
    const TabularGame& game, const BehavioralStrategy& policy);

// Stationary values by value iteration to 1e-12, values[s][agent].
std::vector<std::vector<double>> policy_value_stationary(
    const TabularGame& game, const StagePolicy& policy);

}  // namespace fluidrl
