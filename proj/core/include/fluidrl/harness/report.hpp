#pragma once

#include <string>
#include <vector>

namespace fluidrl {

struct ReportOptions {
  std::string runs_dir;
  std::string out_dir;
};

struct ReportSummary {
  int runs = 0;
  int groups = 0;
  bool degenerate_normalization = false;
  std::vector<std::string> files;  // artifacts written, out_dir relative
};

// Aggregates every run directory under runs_dir (one subdirectory per run,
// holding run_info.json, metrics.csv and optional eval_*.csv episode logs)
// into CSV tables and SVG charts in out_dir:
//   - normalized return curves, mean +- one std across the seeds of a
//     preset, min-max scaled over every value of every run,
//   - population curves,
//   - spawn composition by level for foraging runs,
//   - per-episode returns split by gate state for bridge runs,
//   - an ablation table over prey densities; fixed-roster groups are
//     charged the spawn costs a grown group would have paid, and fluid
//     groups report their return relative to the best fixed group.
// Checkpoint windows that completed no episode borrow the nearest earlier
// window's value. Metrics files with a different schema version abort the
// report with an error listing every offending file.
ReportSummary write_report(const ReportOptions& opt);

}  // namespace fluidrl
