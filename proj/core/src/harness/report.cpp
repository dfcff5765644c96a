#include "fluidrl/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fluidrl/common/config.hpp"
#include "fluidrl/harness/eval.hpp"
#include "fluidrl/harness/metrics.hpp"
#include "fluidrl/harness/svg.hpp"

namespace fluidrl {

namespace {

namespace fs = std::filesystem;

struct RunRecord {
  std::string dir;
  std::string run_id;
  std::string group;  // preset, falling back to the algorithm
  std::string algo;
  std::string env_kind;
  Config env_cfg;
  std::uint64_t seed = 0;
  std::vector<MetricRow> rows;
  std::vector<EvalReport> evals;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// joint_return_mean per checkpoint with empty windows filled from the
// nearest earlier (else later) populated one.
std::vector<double> filled_series(const std::vector<MetricRow>& rows,
                                  bool alive) {
  const std::size_t n = rows.size();
  std::vector<double> v(n, 0.0);
  std::vector<bool> ok(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = alive ? rows[i].alive_mean : rows[i].joint_return_mean;
    ok[i] = true;
    try {
      auto extra = nlohmann::json::parse(rows[i].extra);
      if (extra.contains("episodes") && extra["episodes"].get<long long>() == 0)
        ok[i] = false;
    } catch (...) {
    }
  }
  for (std::size_t i = 1; i < n; ++i)
    if (!ok[i] && ok[i - 1]) {
      v[i] = v[i - 1];
      ok[i] = true;
    }
  for (std::size_t i = n; i-- > 1;)
    if (!ok[i - 1] && ok[i]) {
      v[i - 1] = v[i];
      ok[i - 1] = true;
    }
  return v;
}

struct Curve {
  std::vector<double> x, mean, sd;
};

Curve group_curve(const std::vector<const std::vector<double>*>& series,
                  const std::vector<const RunRecord*>& runs) {
  Curve c;
  std::size_t n = series.empty() ? 0 : series[0]->size();
  for (const auto* s : series) n = std::min(n, s->size());
  for (std::size_t i = 0; i < n; ++i) {
    double m = 0.0;
    for (const auto* s : series) m += (*s)[i];
    m /= static_cast<double>(series.size());
    double var = 0.0;
    for (const auto* s : series) var += ((*s)[i] - m) * ((*s)[i] - m);
    var /= static_cast<double>(series.size());
    double x = 0.0;
    for (const auto* r : runs)
      x += static_cast<double>(r->rows[i].env_steps);
    x /= static_cast<double>(runs.size());
    c.x.push_back(x);
    c.mean.push_back(m);
    c.sd.push_back(std::sqrt(var));
  }
  return c;
}

}  // namespace

ReportSummary write_report(const ReportOptions& opt) {
  std::vector<RunRecord> runs;
  std::vector<std::string> bad_metrics;

  std::vector<fs::path> dirs;
  if (!fs::exists(opt.runs_dir))
    throw std::runtime_error("report: no such directory: " + opt.runs_dir);
  for (const auto& entry : fs::directory_iterator(opt.runs_dir))
    if (entry.is_directory() && fs::exists(entry.path() / "run_info.json"))
      dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());

  for (const fs::path& dir : dirs) {
    RunRecord rec;
    rec.dir = dir.string();
    {
      std::ifstream in(dir / "run_info.json");
      nlohmann::json j;
      in >> j;
      rec.run_id = j.value("run_id", dir.filename().string());
      const std::string preset = j.value("preset", "");
      rec.algo = j.value("algo", "");
      rec.group = preset.empty() ? rec.algo : preset;
      rec.env_kind = j.value("env", "");
      rec.seed = j.value("seed", 0ull);
      rec.env_cfg = Config::parse(j.value("env_config", ""));
    }
    const std::string metrics_path = (dir / "metrics.csv").string();
    if (fs::exists(metrics_path)) {
      try {
        rec.rows = read_metrics(metrics_path);
      } catch (const std::exception&) {
        bad_metrics.push_back(metrics_path);
        continue;
      }
    }
    std::vector<fs::path> eval_files;
    for (const auto& f : fs::directory_iterator(dir))
      if (f.path().filename().string().rfind("eval", 0) == 0 &&
          f.path().extension() == ".csv")
        eval_files.push_back(f.path());
    std::sort(eval_files.begin(), eval_files.end());
    for (const fs::path& f : eval_files)
      rec.evals.push_back(read_eval_csv(f.string()));
    runs.push_back(std::move(rec));
  }
  if (!bad_metrics.empty()) {
    std::string msg = "report: incompatible metrics files:";
    for (const std::string& f : bad_metrics) msg += " " + f;
    throw std::runtime_error(msg);
  }
  if (runs.empty())
    throw std::runtime_error("report: no runs under " + opt.runs_dir);

  fs::create_directories(opt.out_dir);
  ReportSummary summary;
  summary.runs = static_cast<int>(runs.size());
  auto out_path = [&](const std::string& name) {
    summary.files.push_back(name);
    return opt.out_dir + "/" + name;
  };

  // Group curves over the min-max normalized return scale shared by every
  // run in the report.
  std::map<std::string, std::vector<const RunRecord*>> groups;
  for (const RunRecord& r : runs) groups[r.group].push_back(&r);
  summary.groups = static_cast<int>(groups.size());

  std::vector<std::vector<double>> raw_series;
  std::vector<const RunRecord*> series_owner;
  for (const RunRecord& r : runs)
    if (!r.rows.empty()) {
      raw_series.push_back(filled_series(r.rows, /*alive=*/false));
      series_owner.push_back(&r);
    }

  if (!raw_series.empty()) {
    NormalizedReturns norm = normalize_returns(raw_series);
    if (norm.degenerate) {
      summary.degenerate_normalization = true;
      std::cerr << "report: every return is identical; normalized curves are"
                   " all zero\n";
    }
    std::map<std::string, std::vector<const std::vector<double>*>> by_group;
    std::map<std::string, std::vector<const RunRecord*>> owners;
    for (std::size_t i = 0; i < norm.series.size(); ++i) {
      by_group[series_owner[i]->group].push_back(&norm.series[i]);
      owners[series_owner[i]->group].push_back(series_owner[i]);
    }

    std::ofstream csv(out_path("returns_normalized.csv"));
    csv << "group,checkpoint,env_steps,mean,std,runs\n";
    SvgChart chart(860, 420, "Normalized joint return");
    chart.set_axis_labels("environment steps", "normalized return");
    int ci = 0;
    for (const auto& [name, series] : by_group) {
      Curve c = group_curve(series, owners[name]);
      for (std::size_t i = 0; i < c.x.size(); ++i)
        csv << name << ',' << i + 1 << ',' << fmt(c.x[i]) << ','
            << fmt(c.mean[i]) << ',' << fmt(c.sd[i]) << ',' << series.size()
            << "\n";
      std::vector<double> lo(c.mean), hi(c.mean);
      for (std::size_t i = 0; i < c.mean.size(); ++i) {
        lo[i] -= c.sd[i];
        hi[i] += c.sd[i];
      }
      const std::string color = chart_color(ci++);
      chart.add_band(c.x, lo, hi, color);
      chart.add_line(c.x, c.mean, color, name);
    }
    chart.save(out_path("returns_normalized.svg"));

    // Population curves on the raw scale.
    std::map<std::string, std::vector<std::vector<double>>> alive_series;
    for (const RunRecord& r : runs)
      if (!r.rows.empty())
        alive_series[r.group].push_back(filled_series(r.rows, /*alive=*/true));
    std::ofstream acsv(out_path("population.csv"));
    acsv << "group,checkpoint,env_steps,mean,std,runs\n";
    SvgChart alive_chart(860, 420, "Population at episode end");
    alive_chart.set_axis_labels("environment steps", "agents alive");
    ci = 0;
    for (const auto& [name, owner_list] : owners) {
      std::vector<const std::vector<double>*> ptrs;
      for (const auto& s : alive_series[name]) ptrs.push_back(&s);
      Curve c = group_curve(ptrs, owner_list);
      for (std::size_t i = 0; i < c.x.size(); ++i)
        acsv << name << ',' << i + 1 << ',' << fmt(c.x[i]) << ','
             << fmt(c.mean[i]) << ',' << fmt(c.sd[i]) << ',' << ptrs.size()
             << "\n";
      std::vector<double> lo(c.mean), hi(c.mean);
      for (std::size_t i = 0; i < c.mean.size(); ++i) {
        lo[i] -= c.sd[i];
        hi[i] += c.sd[i];
      }
      const std::string color = chart_color(ci++);
      alive_chart.add_band(c.x, lo, hi, color);
      alive_chart.add_line(c.x, c.mean, color, name);
    }
    alive_chart.save(out_path("population.svg"));
  }

  // Spawn composition by level, foraging runs with episode logs.
  {
    std::map<std::string, std::map<int, std::pair<double, int>>> comp;
    for (const RunRecord& r : runs) {
      if (r.env_kind != "lbf") continue;
      for (const EvalReport& ev : r.evals)
        for (const auto& [lvl, mean] : ev.spawned_per_level) {
          auto& slot = comp[r.group][lvl];
          slot.first += mean;
          ++slot.second;
        }
    }
    if (!comp.empty()) {
      std::ofstream csv(out_path("spawn_composition.csv"));
      csv << "group,level,spawned_per_episode\n";
      SvgChart chart(700, 380, "Spawned agents by level");
      chart.set_axis_labels("", "spawns per episode");
      int ci = 0;
      for (const auto& [name, levels] : comp) {
        const std::string color = chart_color(ci++);
        for (const auto& [lvl, acc] : levels) {
          const double v = acc.first / acc.second;
          csv << name << ',' << lvl << ',' << fmt(v) << "\n";
          chart.add_bar(name + " L" + std::to_string(lvl), v, color);
        }
      }
      chart.save(out_path("spawn_composition.svg"));
    }
  }

  // Per-episode returns split by gate state, bridge runs.
  {
    bool have = false;
    std::ofstream csv;
    SvgChart chart(700, 380, "Returns by gate state");
    chart.set_axis_labels("episode", "joint return");
    std::vector<double> open_x, open_y, closed_x, closed_y;
    for (const RunRecord& r : runs) {
      if (r.env_kind != "puddle_bridge") continue;
      for (const EvalReport& ev : r.evals)
        for (const EvalEpisode& e : ev.rows) {
          if (!have) {
            csv.open(out_path("gate_split.csv"));
            csv << "run_id,episode,gate,joint_return,end_alive\n";
            have = true;
          }
          csv << r.run_id << ',' << e.index << ',' << e.gate << ','
              << fmt(e.joint_return) << ',' << e.end_alive << "\n";
          (e.gate == 1 ? open_x : closed_x).push_back(e.index);
          (e.gate == 1 ? open_y : closed_y).push_back(e.joint_return);
        }
    }
    if (have) {
      chart.add_scatter(open_x, open_y, chart_color(0), "gate open");
      chart.add_scatter(closed_x, closed_y, chart_color(1), "gate closed");
      chart.save(out_path("gate_split.svg"));
    }
  }

  // Prey-density ablation. Fixed-roster groups (no room to grow) are
  // charged c_spawn * (n - 2) after the fact; fluid groups report their
  // return against the best fixed group of the same density.
  {
    struct Cell {
      double ret = 0.0, alive = 0.0;
      long long episodes = 0;
      bool fixed = false;
      int n_agents = 0;
      double c_spawn = 0.0;
      std::string group;
    };
    std::map<std::pair<int, std::string>, Cell> cells;
    for (const RunRecord& r : runs) {
      if (r.env_kind != "predator_prey" || r.evals.empty()) continue;
      const int n_prey = r.env_cfg.get_int("n_prey", 6);
      const int initial = r.env_cfg.get_int("initial_agents", 2);
      const int cap = r.env_cfg.get_int("max_agents", 6);
      Cell& cell = cells[{n_prey, r.group}];
      cell.fixed = initial == cap;
      cell.n_agents = initial;
      cell.c_spawn = r.env_cfg.get_double("c_spawn", 2.0);
      cell.group = r.group;
      for (const EvalReport& ev : r.evals)
        for (const EvalEpisode& e : ev.rows) {
          cell.ret += e.joint_return;
          cell.alive += e.end_alive;
          ++cell.episodes;
        }
    }
    if (!cells.empty()) {
      std::ofstream csv(out_path("ablation.csv"));
      csv << "n_prey,group,kind,n_agents,return_mean,return_adjusted,"
             "end_alive_mean,relative_efficiency\n";
      SvgChart chart(760, 400, "End population by prey density");
      chart.set_axis_labels("", "agents alive at episode end");
      std::map<int, double> best_fixed;
      for (auto& [key, c] : cells) {
        if (c.episodes == 0) continue;
        c.ret /= static_cast<double>(c.episodes);
        c.alive /= static_cast<double>(c.episodes);
        if (c.fixed) {
          const double adj = c.ret - c.c_spawn * (c.n_agents - 2);
          auto it = best_fixed.find(key.first);
          if (it == best_fixed.end() || adj > it->second)
            best_fixed[key.first] = adj;
        }
      }
      int ci = 0;
      for (const auto& [key, c] : cells) {
        if (c.episodes == 0) continue;
        const double adj =
            c.fixed ? c.ret - c.c_spawn * (c.n_agents - 2) : c.ret;
        std::string eff = "";
        if (!c.fixed && best_fixed.count(key.first))
          eff = fmt(c.ret / best_fixed[key.first]);
        csv << key.first << ',' << c.group << ','
            << (c.fixed ? "fixed" : "fluid") << ',' << c.n_agents << ','
            << fmt(c.ret) << ',' << fmt(adj) << ',' << fmt(c.alive) << ','
            << eff << "\n";
        chart.add_bar("p" + std::to_string(key.first) + " " + c.group,
                      c.alive, chart_color(ci++));
      }
      chart.save(out_path("ablation.svg"));
    }
  }

  {
    std::ofstream idx(opt.out_dir + "/index.md");
    idx << "# Run report\n\n" << summary.runs << " runs in "
        << summary.groups << " groups.\n\n";
    for (const std::string& f : summary.files) idx << "- " << f << "\n";
    if (summary.degenerate_normalization)
      idx << "\nEvery return was identical; normalized curves are flat "
             "zero.\n";
    summary.files.push_back("index.md");
  }
  return summary;
}

}  // namespace fluidrl
