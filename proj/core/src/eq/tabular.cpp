#include "fluidrl/eq/tabular.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace fluidrl {

namespace {

constexpr double kProbTol = 1e-12;

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> out;
  if (text == "-") return out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) throw std::runtime_error("empty entry in " + what);
    out.push_back(std::stoi(tok));
  }
  return out;
}

std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

}  // namespace

int TabularGame::state_index(const std::string& s) const {
  for (int i = 0; i < (int)states.size(); ++i)
    if (states[i].name == s) return i;
  throw std::runtime_error("unknown state: " + s);
}

std::vector<int> TabularGame::split_joint(int s, int joint) const {
  const State& st = states.at(s);
  std::vector<int> acts(st.alive.size());
  for (size_t k = 0; k < st.alive.size(); ++k) {
    acts[k] = joint % st.n_actions[k];
    joint /= st.n_actions[k];
  }
  return acts;
}

int TabularGame::join_actions(int s, const std::vector<int>& acts) const {
  const State& st = states.at(s);
  if (acts.size() != st.alive.size())
    throw std::runtime_error("join_actions: arity mismatch at " + st.name);
  int joint = 0;
  for (int k = (int)acts.size() - 1; k >= 0; --k) {
    if (acts[k] < 0 || acts[k] >= st.n_actions[k])
      throw std::runtime_error("join_actions: action out of range at " + st.name);
    joint = joint * st.n_actions[k] + acts[k];
  }
  return joint;
}

TabularGame TabularGame::parse(const std::string& text) {
  TabularGame g;
  std::unordered_map<std::string, int> index;
  bool saw_agents = false;

  auto require_state_done = [&](const std::string& verb) {
    if (g.states.empty())
      throw std::runtime_error(verb + " before any state declaration");
  };

  // t/r lines share the prefix "<state> <actions...> ->".
  auto parse_joint_prefix = [&](std::istringstream& ss, const std::string& verb) {
    std::string sname;
    if (!(ss >> sname)) throw std::runtime_error(verb + ": missing state");
    auto it = index.find(sname);
    if (it == index.end()) throw std::runtime_error(verb + ": unknown state " + sname);
    int s = it->second;
    std::vector<int> acts(g.states[s].alive.size());
    for (auto& a : acts)
      if (!(ss >> a)) throw std::runtime_error(verb + ": too few actions at " + sname);
    std::string arrow;
    if (!(ss >> arrow) || arrow != "->")
      throw std::runtime_error(verb + ": expected -> at " + sname);
    return std::make_pair(s, g.join_actions(s, acts));
  };

  std::istringstream lines(text);
  std::string raw;
  while (std::getline(lines, raw)) {
    std::istringstream ss(strip_comment(raw));
    std::string verb;
    if (!(ss >> verb)) continue;

    if (verb == "game") {
      ss >> g.name;
    } else if (verb == "agents") {
      if (!(ss >> g.n_agents) || g.n_agents < 1)
        throw std::runtime_error("agents: expected positive count");
      saw_agents = true;
    } else if (verb == "gamma") {
      if (!(ss >> g.gamma) || g.gamma <= 0.0 || g.gamma >= 1.0)
        throw std::runtime_error("gamma: expected value in (0,1)");
    } else if (verb == "horizon") {
      std::string h;
      ss >> h;
      if (h == "inf") {
        g.horizon = -1;
      } else {
        g.horizon = std::stoi(h);
        if (g.horizon < 1) throw std::runtime_error("horizon: expected >= 1 or inf");
      }
    } else if (verb == "state") {
      if (!saw_agents) throw std::runtime_error("state before agents line");
      State st;
      std::string field;
      if (!(ss >> st.name)) throw std::runtime_error("state: missing name");
      if (index.count(st.name)) throw std::runtime_error("duplicate state " + st.name);
      while (ss >> field) {
        auto eq = field.find('=');
        if (eq == std::string::npos)
          throw std::runtime_error("state " + st.name + ": bad field " + field);
        std::string key = field.substr(0, eq), val = field.substr(eq + 1);
        if (key == "alive") {
          st.alive = parse_int_list(val, "alive");
        } else if (key == "actions") {
          st.n_actions = parse_int_list(val, "actions");
        } else {
          throw std::runtime_error("state " + st.name + ": unknown field " + key);
        }
      }
      if (st.alive.size() != st.n_actions.size())
        throw std::runtime_error("state " + st.name + ": alive/actions length mismatch");
      for (size_t k = 0; k < st.alive.size(); ++k) {
        if (st.alive[k] < 1 || st.alive[k] > g.n_agents)
          throw std::runtime_error("state " + st.name + ": agent id out of range");
        if (k > 0 && st.alive[k] <= st.alive[k - 1])
          throw std::runtime_error("state " + st.name + ": alive ids must ascend");
        if (st.n_actions[k] < 1)
          throw std::runtime_error("state " + st.name + ": action count must be >= 1");
      }
      st.n_joint = 1;
      for (int k : st.n_actions) st.n_joint *= k;
      st.trans.assign(st.n_joint, {});
      st.rewards.assign(st.n_joint, std::vector<double>(g.n_agents, 0.0));
      index[st.name] = (int)g.states.size();
      g.states.push_back(std::move(st));
    } else if (verb == "start") {
      require_state_done("start");
      std::string sname;
      ss >> sname;
      auto it = index.find(sname);
      if (it == index.end()) throw std::runtime_error("start: unknown state " + sname);
      g.start = it->second;
    } else if (verb == "t") {
      require_state_done("t");
      auto [s, joint] = parse_joint_prefix(ss, "t");
      if (!g.states[s].trans[joint].empty())
        throw std::runtime_error("duplicate t line at " + g.states[s].name);
      std::string outcome;
      double total = 0.0;
      while (ss >> outcome) {
        auto colon = outcome.rfind(':');
        if (colon == std::string::npos)
          throw std::runtime_error("t: expected state:prob, got " + outcome);
        std::string dest = outcome.substr(0, colon);
        double p = std::stod(outcome.substr(colon + 1));
        auto it = index.find(dest);
        if (it == index.end()) throw std::runtime_error("t: unknown state " + dest);
        if (p < 0.0) throw std::runtime_error("t: negative probability");
        g.states[s].trans[joint].push_back({it->second, p});
        total += p;
      }
      if (g.states[s].trans[joint].empty())
        throw std::runtime_error("t: no outcomes at " + g.states[s].name);
      if (std::abs(total - 1.0) > kProbTol)
        throw std::runtime_error("t: probabilities at " + g.states[s].name +
                                 " sum to " + std::to_string(total));
      g.states[s].absorbing = false;
    } else if (verb == "r") {
      require_state_done("r");
      auto [s, joint] = parse_joint_prefix(ss, "r");
      for (size_t k = 0; k < g.states[s].alive.size(); ++k) {
        double v;
        if (!(ss >> v)) throw std::runtime_error("r: too few rewards at " + g.states[s].name);
        g.states[s].rewards[joint][g.states[s].alive[k] - 1] = v;
      }
      double extra;
      if (ss >> extra) throw std::runtime_error("r: too many rewards at " + g.states[s].name);
    } else {
      throw std::runtime_error("unknown directive: " + verb);
    }
  }

  if (g.states.empty()) throw std::runtime_error("game has no states");
  if (g.start < 0) g.start = 0;
  for (const auto& st : g.states) {
    if (st.absorbing) continue;
    for (int j = 0; j < st.n_joint; ++j)
      if (st.trans[j].empty())
        throw std::runtime_error("state " + st.name + ": joint action " +
                                 std::to_string(j) + " has no t line");
  }
  return g;
}

TabularGame TabularGame::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open game file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

StagePolicy uniform_stage_policy(const TabularGame& game) {
  StagePolicy pol(game.states.size());
  for (size_t s = 0; s < game.states.size(); ++s) {
    const auto& st = game.states[s];
    pol[s].resize(st.alive.size());
    for (size_t k = 0; k < st.alive.size(); ++k)
      pol[s][k].assign(st.n_actions[k], 1.0 / st.n_actions[k]);
  }
  return pol;
}

std::vector<double> joint_distribution(const TabularGame& game, int s,
                                       const std::vector<std::vector<double>>& dists) {
  const auto& st = game.states.at(s);
  if (dists.size() != st.alive.size())
    throw std::runtime_error("joint_distribution: arity mismatch at " + st.name);
  std::vector<double> out(st.n_joint, 1.0);
  for (int j = 0; j < st.n_joint; ++j) {
    auto acts = game.split_joint((int)s, j);
    for (size_t k = 0; k < acts.size(); ++k) out[j] *= dists[k].at(acts[k]);
  }
  return out;
}

namespace {

// One backward step: given next-layer values, fills cur[s][agent].
// If fluid_only, reward terms are taken only for alive slots; the stored
// rewards are zero elsewhere so both modes must agree.
void backup_layer(const TabularGame& game, const StagePolicy& pol, bool fluid_only,
                  const std::vector<std::vector<double>>& next,
                  std::vector<std::vector<double>>& cur) {
  for (size_t s = 0; s < game.states.size(); ++s) {
    const auto& st = game.states[s];
    auto jd = joint_distribution(game, (int)s, pol.at(s));
    std::vector<double> v(game.n_agents, 0.0);
    for (int j = 0; j < st.n_joint; ++j) {
      if (jd[j] <= 0.0) continue;
      if (fluid_only) {
        for (int id : st.alive) v[id - 1] += jd[j] * st.rewards[j][id - 1];
      } else {
        for (int i = 0; i < game.n_agents; ++i) v[i] += jd[j] * st.rewards[j][i];
      }
      if (!st.absorbing) {
        for (auto [s2, p] : st.trans[j]) {
          double w = jd[j] * p * game.gamma;
          for (int i = 0; i < game.n_agents; ++i) v[i] += w * next[s2][i];
        }
      }
    }
    cur[s] = std::move(v);
  }
}

std::vector<std::vector<std::vector<double>>> value_impl(
    const TabularGame& game, const BehavioralStrategy& policy, bool fluid_only) {
  if (game.horizon < 1)
    throw std::runtime_error("policy_value: finite horizon required");
  std::vector<std::vector<std::vector<double>>> values(
      game.horizon + 1,
      std::vector<std::vector<double>>(game.states.size(),
                                       std::vector<double>(game.n_agents, 0.0)));
  for (int t = game.horizon - 1; t >= 0; --t)
    backup_layer(game, policy.at_stage(t), fluid_only, values[t + 1], values[t]);
  return values;
}

}  // namespace

std::vector<std::vector<std::vector<double>>> policy_value(
    const TabularGame& game, const BehavioralStrategy& policy) {
  return value_impl(game, policy, false);
}

std::vector<std::vector<std::vector<double>>> policy_value_fluid(
    const TabularGame& game, const BehavioralStrategy& policy) {
  return value_impl(game, policy, true);
}

std::vector<std::vector<double>> policy_value_stationary(
    const TabularGame& game, const StagePolicy& policy) {
  std::vector<std::vector<double>> v(game.states.size(),
                                     std::vector<double>(game.n_agents, 0.0));
  std::vector<std::vector<double>> next = v;
  for (int iter = 0; iter < 2000000; ++iter) {
    backup_layer(game, policy, false, v, next);
    double delta = 0.0;
    for (size_t s = 0; s < v.size(); ++s)
      for (int i = 0; i < game.n_agents; ++i)
        delta = std::max(delta, std::abs(next[s][i] - v[s][i]));
    std::swap(v, next);
    if (delta < 1e-12) return v;
  }
  throw std::runtime_error("policy_value_stationary: no convergence");
}

}  // namespace fluidrl
