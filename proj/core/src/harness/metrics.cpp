#include "fluidrl/harness/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace fluidrl {

namespace {

constexpr const char* kHeader =
    "run_id,seed,checkpoint,env_steps,joint_return_mean,joint_return_std,"
    "alive_mean,extra";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

// Splits one CSV line honoring double-quoted fields.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

MetricsWriter::MetricsWriter(const std::string& path) {
  const bool fresh = !std::ifstream(path).good();
  out_.open(path, std::ios::app);
  if (!out_) throw std::runtime_error("metrics: cannot open " + path);
  if (fresh) {
    out_ << "# schema " << kMetricsSchemaVersion << "\n" << kHeader << "\n";
    out_.flush();
  }
}

void MetricsWriter::append(const MetricRow& row) {
  out_ << row.run_id << ',' << row.seed << ',' << row.checkpoint << ','
       << row.env_steps << ',' << fmt(row.joint_return_mean) << ','
       << fmt(row.joint_return_std) << ',' << fmt(row.alive_mean) << ','
       << quote(row.extra) << "\n";
  out_.flush();
  if (!out_) throw std::runtime_error("metrics: write failed");
}

std::vector<MetricRow> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("metrics: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("metrics: empty file " + path);
  if (line != "# schema " + std::to_string(kMetricsSchemaVersion))
    throw std::runtime_error("metrics: unsupported schema in " + path +
                             ": " + line);
  if (!std::getline(in, line) || line != kHeader)
    throw std::runtime_error("metrics: bad header in " + path);
  std::vector<MetricRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv(line);
    if (f.size() != 8)
      throw std::runtime_error("metrics: malformed row in " + path + ": " +
                               line);
    MetricRow r;
    r.run_id = f[0];
    r.seed = std::stoull(f[1]);
    r.checkpoint = std::stoi(f[2]);
    r.env_steps = std::stoll(f[3]);
    r.joint_return_mean = std::stod(f[4]);
    r.joint_return_std = std::stod(f[5]);
    r.alive_mean = std::stod(f[6]);
    r.extra = f[7];
    rows.push_back(std::move(r));
  }
  return rows;
}

NormalizedReturns normalize_returns(
    const std::vector<std::vector<double>>& series) {
  bool any = false;
  double lo = 0.0, hi = 0.0;
  for (const auto& s : series)
    for (double v : s) {
      if (!any) {
        lo = hi = v;
        any = true;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  if (!any) throw std::runtime_error("normalize: no return values given");
  NormalizedReturns out;
  out.r_min = lo;
  out.r_max = hi;
  out.series.reserve(series.size());
  if (hi == lo) {
    out.degenerate = true;
    for (const auto& s : series)
      out.series.emplace_back(s.size(), 0.0);
    return out;
  }
  for (const auto& s : series) {
    std::vector<double> n;
    n.reserve(s.size());
    for (double v : s) n.push_back((v - lo) / (hi - lo));
    out.series.push_back(std::move(n));
  }
  return out;
}

}  // namespace fluidrl
