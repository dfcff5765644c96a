#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fluidrl {

struct EvalEpisode {
  int index = 0;
  double joint_return = 0.0;
  int end_alive = 0;
  int gate = -1;        // bridge maps: 1 open, 0 closed, -1 elsewhere
  int prey_count = -1;  // pursuit maps: preys at episode start, -1 elsewhere
  std::vector<int> spawned_levels;  // foraging: levels of in-episode spawns
};

struct EvalReport {
  std::string algo;
  std::string env_kind;
  int episodes = 0;
  double return_mean = 0.0;
  double return_std = 0.0;
  double alive_mean = 0.0;  // population at episode end
  // Gate partition, bridge maps only.
  int gate_open_n = 0, gate_closed_n = 0;
  double gate_open_return_mean = 0.0, gate_closed_return_mean = 0.0;
  // Mean count of in-episode spawns per level, foraging only.
  std::map<int, double> spawned_per_level;
  std::vector<EvalEpisode> rows;
};

// Rolls out `episodes` greedy episodes of the checkpointed policy on a fresh
// environment rebuilt from the checkpoint's embedded config. No population
// randomization: the episode ceiling and starting roster are the configured
// ones. episodes == 0 returns an empty report. Throws when the checkpoint's
// network dimensions disagree with the environment, naming the mismatched
// quantity.
EvalReport evaluate_checkpoint(const std::string& ckpt_path, int episodes,
                               std::uint64_t seed);

void write_eval_csv(const EvalReport& report, const std::string& path);
EvalReport read_eval_csv(const std::string& path);

}  // namespace fluidrl
