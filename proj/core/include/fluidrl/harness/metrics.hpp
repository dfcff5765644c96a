#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace fluidrl {

inline constexpr int kMetricsSchemaVersion = 1;

struct MetricRow {
  std::string run_id;
  std::uint64_t seed = 0;
  int checkpoint = 0;
  long long env_steps = 0;
  double joint_return_mean = 0.0;
  double joint_return_std = 0.0;
  double alive_mean = 0.0;
  std::string extra;  // JSON object with env/algo specific fields
};

// Append-only CSV log. The first line pins the schema version so readers can
// refuse files written under a different layout.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void append(const MetricRow& row);

 private:
  std::ofstream out_;
};

std::vector<MetricRow> read_metrics(const std::string& path);

struct NormalizedReturns {
  std::vector<std::vector<double>> series;
  bool degenerate = false;  // flat input, everything mapped to zero
  double r_min = 0.0, r_max = 0.0;
};

// (R - R_min) / (R_max - R_min) with the extrema taken over every element of
// every series. Throws when there is nothing to normalize.
NormalizedReturns normalize_returns(
    const std::vector<std::vector<double>>& series);

}  // namespace fluidrl
