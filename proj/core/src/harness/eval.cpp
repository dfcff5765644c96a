#include "fluidrl/harness/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>

#include "fluidrl/common/config.hpp"
#include "fluidrl/common/rng.hpp"
#include "fluidrl/env/lbf.hpp"
#include "fluidrl/env/predator_prey.hpp"
#include "fluidrl/env/puddle_bridge.hpp"
#include "fluidrl/env/registry.hpp"
#include "fluidrl/learn/ppo.hpp"
#include "fluidrl/learn/qlearner.hpp"
#include "fluidrl/nn/params.hpp"

namespace fluidrl {

namespace {

void check_dim(const char* what, int ckpt_value, int env_value) {
  if (ckpt_value != env_value) {
    std::ostringstream msg;
    msg << "eval: checkpoint/environment mismatch on " << what
        << ": checkpoint has " << ckpt_value << ", environment has "
        << env_value;
    throw std::runtime_error(msg.str());
  }
}

void finalize(EvalReport& r) {
  r.episodes = static_cast<int>(r.rows.size());
  if (r.rows.empty()) return;
  double sum = 0.0, alive = 0.0;
  double open_sum = 0.0, closed_sum = 0.0;
  std::map<int, long long> level_counts;
  for (const EvalEpisode& e : r.rows) {
    sum += e.joint_return;
    alive += e.end_alive;
    if (e.gate == 1) {
      ++r.gate_open_n;
      open_sum += e.joint_return;
    } else if (e.gate == 0) {
      ++r.gate_closed_n;
      closed_sum += e.joint_return;
    }
    for (int lvl : e.spawned_levels) ++level_counts[lvl];
  }
  const double n = static_cast<double>(r.rows.size());
  r.return_mean = sum / n;
  r.alive_mean = alive / n;
  double var = 0.0;
  for (const EvalEpisode& e : r.rows) {
    const double d = e.joint_return - r.return_mean;
    var += d * d;
  }
  r.return_std = std::sqrt(var / n);
  if (r.gate_open_n > 0) r.gate_open_return_mean = open_sum / r.gate_open_n;
  if (r.gate_closed_n > 0)
    r.gate_closed_return_mean = closed_sum / r.gate_closed_n;
  for (const auto& [lvl, c] : level_counts)
    r.spawned_per_level[lvl] = static_cast<double>(c) / n;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

EvalReport evaluate_checkpoint(const std::string& ckpt_path, int episodes,
                               std::uint64_t seed) {
  if (episodes < 0) throw std::runtime_error("eval: episodes must be >= 0");
  std::map<std::string, std::string> meta;
  load_checkpoint(ckpt_path, &meta);
  if (!meta.count("env_config"))
    throw std::runtime_error(
        "eval: checkpoint lacks an embedded environment config: " + ckpt_path);
  const Config env_cfg = Config::parse(meta.at("env_config"));
  std::unique_ptr<FluidEnv> env = make_env(env_cfg);
  const int A = env->max_agents();
  const int S = env->observation_size();

  const std::string algo = meta.at("algo");
  const bool value_based = algo == "iql" || algo == "vdn";
  std::unique_ptr<ValueLearner> vl;
  std::unique_ptr<PolicyLearner> pl;
  if (value_based) {
    vl = std::make_unique<ValueLearner>(ValueLearner::load(ckpt_path));
    check_dim("max_agents", vl->config().n_agents, A);
    check_dim("num_actions", vl->config().n_actions, env->num_actions());
    check_dim("observation_size", vl->config().obs_size, S);
  } else {
    pl = std::make_unique<PolicyLearner>(PolicyLearner::load(ckpt_path));
    check_dim("max_agents", pl->config().n_agents, A);
    check_dim("num_actions", pl->config().n_actions, env->num_actions());
    check_dim("observation_size", pl->config().obs_size, S);
  }

  EvalReport report;
  report.algo = algo;
  report.env_kind = env_cfg.get_str("env");

  auto* pp = dynamic_cast<const PredatorPreyEnv*>(env.get());
  auto* lbf = dynamic_cast<const LbfEnv*>(env.get());
  auto* pb = dynamic_cast<const PuddleBridgeEnv*>(env.get());

  Rng seeder(seed);
  Rng scratch(seed + 7);
  std::vector<std::uint8_t> alive(A);
  std::vector<int> actions(A);
  JointAction joint(A);

  for (int k = 0; k < episodes; ++k) {
    EvalEpisode ep;
    ep.index = k;
    std::vector<double> obs = env->reset(seeder.next_u64());
    if (pp) ep.prey_count = pp->preys_alive();
    if (pb) ep.gate = pb->gate_open() ? 1 : 0;
    bool done = false;
    long long guard = 0;
    while (!done) {
      if (++guard > 1000000)
        throw std::runtime_error("eval: episode exceeded 1e6 steps");
      const PopulationState& pop = env->population();
      for (int i = 0; i < A; ++i) alive[i] = pop.is_alive(i + 1) ? 1 : 0;
      if (vl)
        vl->select_actions(1, obs.data(), alive.data(), 0.0, 0.0, scratch,
                           actions.data());
      else
        pl->act_greedy(1, obs.data(), alive.data(), actions.data());
      std::copy(actions.begin(), actions.end(), joint.begin());
      StepResult sr = env->step(joint);
      for (double r : sr.rewards) ep.joint_return += r;
      obs = std::move(sr.obs);
      done = sr.done;
    }
    ep.end_alive = env->population().alive_count();
    if (lbf) ep.spawned_levels = lbf->spawned_agent_levels();
    report.rows.push_back(std::move(ep));
  }
  finalize(report);
  return report;
}

void write_eval_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("eval: cannot write " + path);
  out << "# eval 1 algo=" << report.algo << " env=" << report.env_kind << "\n";
  out << "episode,joint_return,end_alive,gate,prey_count,spawned_levels\n";
  for (const EvalEpisode& e : report.rows) {
    out << e.index << ',' << fmt(e.joint_return) << ',' << e.end_alive << ','
        << e.gate << ',' << e.prey_count << ',';
    for (std::size_t i = 0; i < e.spawned_levels.size(); ++i) {
      if (i) out << ';';
      out << e.spawned_levels[i];
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("eval: write failed for " + path);
}

EvalReport read_eval_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("eval: cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# eval 1", 0) != 0)
    throw std::runtime_error("eval: not an episode log: " + path);
  EvalReport report;
  {
    std::istringstream hdr(line);
    std::string tok;
    while (hdr >> tok) {
      if (tok.rfind("algo=", 0) == 0) report.algo = tok.substr(5);
      if (tok.rfind("env=", 0) == 0) report.env_kind = tok.substr(4);
    }
  }
  if (!std::getline(in, line) ||
      line != "episode,joint_return,end_alive,gate,prey_count,spawned_levels")
    throw std::runtime_error("eval: unexpected header in " + path);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        f.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (f.size() != 6)
      throw std::runtime_error("eval: malformed row in " + path + ": " + line);
    EvalEpisode e;
    e.index = std::stoi(f[0]);
    e.joint_return = std::stod(f[1]);
    e.end_alive = std::stoi(f[2]);
    e.gate = std::stoi(f[3]);
    e.prey_count = std::stoi(f[4]);
    if (!f[5].empty()) {
      std::istringstream ls(f[5]);
      std::string part;
      while (std::getline(ls, part, ';'))
        e.spawned_levels.push_back(std::stoi(part));
    }
    report.rows.push_back(std::move(e));
  }
  finalize(report);
  return report;
}

}  // namespace fluidrl
