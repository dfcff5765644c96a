#pragma once

#include <string>
#include <vector>

#include "fluidrl/common/config.hpp"

namespace fluidrl {

// Outcome of one training job. Checkpoint files stay on disk even when the
// run aborts; `aborted` runs keep everything written up to the failure.
struct TrainResult {
  std::string run_dir;
  std::vector<std::string> checkpoint_paths;
  long long env_steps = 0;
  long long updates = 0;
  long long episodes = 0;
  bool aborted = false;
  std::string abort_reason;
};

// Keys train_run accepts besides "env" and the "env."-prefixed block.
const std::vector<std::string>& train_config_keys();

// Runs one training job.
//
// cfg holds flat key = value settings: trainer keys (see
// train_config_keys), the environment kind under "env", and environment
// settings under "env.<key>". Every key is validated before any file or
// network is touched, so a typo fails fast.
//
// The run writes into <out>/<run_id>/: run_info.json, metrics.csv (one row
// per checkpoint) and ckpt_NNNN.bin. `checkpoints` requested means exactly
// that many checkpoint files at uniform step fractions; a zero-step run
// saves only the initial ckpt_0000.bin. A non-finite loss aborts the run
// and keeps the last finished checkpoint.
TrainResult train_run(const Config& cfg);

}  // namespace fluidrl
