#include "fluidrl/env/lbf.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace fluidrl {

namespace {
constexpr int kDr[4] = {-1, 1, 0, 0};  // N, S, W, E
constexpr int kDc[4] = {0, 0, -1, 1};
}  // namespace

LbfEnv::LbfEnv(const Config& cfg) {
  cfg.validate_keys({"env", "grid_size", "food_levels", "agent_levels",
                     "max_agents", "c_spawn", "c_step", "horizon", "layout"});
  grid_ = cfg.get_int("grid_size", 8);
  food_levels_ =
      cfg.has("food_levels") ? cfg.get_int_list("food_levels")
                             : std::vector<int>{2, 3, 4, 5};
  agent_levels_ = cfg.has("agent_levels") ? cfg.get_int_list("agent_levels")
                                          : std::vector<int>{1, 2};
  max_agents_ = cfg.get_int("max_agents", 4);
  c_spawn_ = cfg.get_double("c_spawn", 1.0);
  c_step_ = cfg.get_double("c_step", 0.025);
  horizon_ = cfg.get_int("horizon", 100);

  if (cfg.has("layout")) {
    std::vector<std::string> rows;
    std::string cur;
    for (char ch : cfg.get_str("layout")) {
      if (ch == '/') {
        rows.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    rows.push_back(cur);
    grid_ = static_cast<int>(rows.size());
    int agents = 0;
    for (int r = 0; r < grid_; ++r) {
      if (static_cast<int>(rows[r].size()) != grid_)
        throw std::runtime_error("lbf: layout is not square");
      for (int c = 0; c < grid_; ++c) {
        char ch = rows[r][c];
        if (ch == '.') continue;
        if (ch >= '1' && ch <= '9') {
          layout_.push_back({r, c, ch - '0'});
          ++agents;
        } else if (ch >= 'a' && ch <= 'i') {
          layout_.push_back(
              {r, c, ~static_cast<int>(layout_food_levels_.size())});
          layout_food_levels_.push_back(ch - 'a' + 1);
        } else {
          throw std::runtime_error("lbf: layout char must be . 1-9 a-i");
        }
      }
    }
    if (agents != static_cast<int>(agent_levels_.size()))
      throw std::runtime_error(
          "lbf: layout agent count must match agent_levels");
    food_levels_ = layout_food_levels_;
  }

  n_foods_ = static_cast<int>(food_levels_.size());
  if (grid_ < 2 || max_agents_ < 1 || agent_levels_.empty() ||
      static_cast<int>(agent_levels_.size()) > max_agents_)
    throw std::runtime_error("lbf: invalid geometry/population");
  for (int l : food_levels_)
    if (l < 1) throw std::runtime_error("lbf: food levels must be positive");
  for (int l : agent_levels_)
    if (l < 1) throw std::runtime_error("lbf: agent levels must be positive");
  for (int l : food_levels_) max_level_ = std::max(max_level_, l);
  for (int l : agent_levels_) max_level_ = std::max(max_level_, l);
}

void LbfEnv::set_initial_agents(int count) {
  if (count > static_cast<int>(agent_levels_.size()))
    throw std::runtime_error(
        "lbf: initial agent override exceeds the configured roster; use "
        "set_initial_levels");
  initial_levels_override_.assign(agent_levels_.begin(),
                                  agent_levels_.begin() + count);
}

void LbfEnv::set_initial_levels(const std::vector<int>& levels) {
  initial_levels_override_ = levels;
}

bool LbfEnv::place_random_empty(int code, int* out_r, int* out_c) {
  int n_empty = 0;
  for (int v : occ_)
    if (v == 0) ++n_empty;
  if (n_empty == 0) return false;
  int k = rng_.uniform_int(0, n_empty - 1);
  for (int i = 0; i < grid_ * grid_; ++i) {
    if (occ_[i] != 0) continue;
    if (k-- == 0) {
      occ_[i] = code;
      *out_r = i / grid_;
      *out_c = i % grid_;
      return true;
    }
  }
  return false;
}

std::vector<double> LbfEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  int ceiling = ceiling_override_ > 0 ? ceiling_override_ : max_agents_;
  ceiling_override_ = -1;  // overrides hold for exactly one episode
  std::vector<int> roster = initial_levels_override_.empty()
                                ? agent_levels_
                                : std::move(initial_levels_override_);
  initial_levels_override_.clear();
  initial_count_ = static_cast<int>(roster.size());
  if (ceiling > max_agents_ || initial_count_ > ceiling ||
      initial_count_ < 1)
    throw std::runtime_error("lbf: initial agents / ceiling out of range");
  if (!layout_.empty() &&
      initial_count_ != static_cast<int>(agent_levels_.size()))
    throw std::runtime_error("lbf: initial roster fixed by layout");

  pop_ = PopulationState(max_agents_, ceiling);
  occ_.assign(grid_ * grid_, 0);
  agent_r_.assign(max_agents_ + 1, 0);
  agent_c_.assign(max_agents_ + 1, 0);
  levels_.assign(max_agents_, 0);
  foods_.assign(n_foods_, Food{});

  if (!layout_.empty()) {
    for (const LayoutCell& lc : layout_) {
      cell(lc.r, lc.c) = lc.code;
      if (lc.code > 0) {
        agent_r_[lc.code] = lc.r;
        agent_c_[lc.code] = lc.c;
        pop_.set_alive(lc.code);
      } else {
        int f = ~lc.code;
        foods_[f] = Food{lc.r, lc.c, food_levels_[f], true};
      }
    }
  } else {
    for (int id = 1; id <= initial_count_; ++id) {
      if (!place_random_empty(id, &agent_r_[id], &agent_c_[id]))
        throw std::runtime_error("lbf: grid too small for agents");
      pop_.set_alive(id);
    }
    for (int f = 0; f < n_foods_; ++f) {
      foods_[f].level = food_levels_[f];
      if (!place_random_empty(~f, &foods_[f].r, &foods_[f].c))
        throw std::runtime_error("lbf: grid too small for foods");
      foods_[f].alive = true;
    }
  }
  for (int i = 0; i < initial_count_; ++i) levels_[i] = roster[i];
  prev_actions_.assign(max_agents_, kDummy);
  step_count_ = 0;
  return all_obs();
}

StepResult LbfEnv::step(const JointAction& actions) {
  StepResult res;
  res.rewards.assign(max_agents_, 0.0);
  std::vector<AgentId> alive_pre = pop_.alive_ids();

  // Moves, ascending id: the target must be empty at resolution time.
  for (AgentId id : alive_pre) {
    int a = actions[id - 1];
    if (a < kNorth || a > kEast) continue;
    int nr = agent_r_[id] + kDr[a - kNorth], nc = agent_c_[id] + kDc[a - kNorth];
    if (!in_bounds(nr, nc) || cell(nr, nc) != 0) continue;
    cell(agent_r_[id], agent_c_[id]) = 0;
    cell(nr, nc) = id;
    agent_r_[id] = nr;
    agent_c_[id] = nc;
  }

  // Spawns: the child inherits its parent's level.
  std::vector<AgentId> spawners;
  for (AgentId id : alive_pre)
    if (actions[id - 1] == kSpawn) spawners.push_back(id);
  int spawned = resolve_spawns(pop_, spawners, [&](AgentId child,
                                                   AgentId parent) {
    if (!place_random_empty(child, &agent_r_[child], &agent_c_[child]))
      return false;
    levels_[child - 1] = levels_[parent - 1];
    return true;
  });

  // Load adjudication on settled positions, one food at a time.
  int collected = 0;
  for (Food& f : foods_) {
    if (!f.alive) continue;
    int level_sum = 0;
    std::vector<AgentId> collectors;
    for (int d = 0; d < 4; ++d) {
      int nr = f.r + kDr[d], nc = f.c + kDc[d];
      if (!in_bounds(nr, nc)) continue;
      int v = cell(nr, nc);
      if (v > 0 && actions[v - 1] == kLoad) {
        collectors.push_back(v);
        level_sum += levels_[v - 1];
      }
    }
    if (collectors.empty() || level_sum < f.level) continue;
    f.alive = false;
    cell(f.r, f.c) = 0;
    ++collected;
    for (AgentId id : collectors)
      res.rewards[id - 1] +=
          static_cast<double>(f.level) * levels_[id - 1] / level_sum;
  }

  // Costs fall on every agent alive at the start of the step.
  double cost =
      c_spawn_ * spawned / static_cast<double>(alive_pre.size()) + c_step_;
  for (AgentId id : alive_pre) res.rewards[id - 1] -= cost;

  ++step_count_;
  prev_actions_ = actions;
  res.info.spawns = spawned;
  res.info.loads = collected;
  res.done = foods_alive() == 0 || step_count_ >= horizon_;
  res.obs = all_obs();
  return res;
}

int LbfEnv::foods_alive() const {
  int n = 0;
  for (const Food& f : foods_)
    if (f.alive) ++n;
  return n;
}

std::vector<int> LbfEnv::spawned_agent_levels() const {
  std::vector<int> out;
  for (AgentId id = initial_count_ + 1; id <= max_agents_; ++id)
    if (pop_.is_alive(id)) out.push_back(levels_[id - 1]);
  return out;
}

void LbfEnv::observe(AgentId id, double* out) const {
  double* p = out;
  for (const Food& f : foods_) {
    if (f.alive) {
      *p++ = static_cast<double>(f.r) / grid_;
      *p++ = static_cast<double>(f.c) / grid_;
      *p++ = static_cast<double>(f.level) / max_level_;
    } else {
      p += 3;
    }
  }
  int child_den = std::max(1, max_agents_ - 1);
  for (AgentId j = 1; j <= max_agents_; ++j) {
    if (!pop_.is_alive(j)) {
      p += 6;  // dead slot: alive flag 0 and zeroed fields
      continue;
    }
    *p++ = static_cast<double>(agent_r_[j]) / grid_;
    *p++ = static_cast<double>(agent_c_[j]) / grid_;
    *p++ = static_cast<double>(levels_[j - 1]) / max_level_;
    *p++ = 1.0;
    *p++ = static_cast<double>(pop_.children_count(j)) / child_den;
    *p++ = static_cast<double>(prev_actions_[j - 1]) / (num_actions() - 1);
  }
  *p++ = static_cast<double>(pop_.ceiling()) / max_agents_;
  *p++ = static_cast<double>(id) / max_agents_;
}

std::vector<double> LbfEnv::all_obs() const {
  int len = observation_size();
  std::vector<double> obs(max_agents_ * len, 0.0);
  for (AgentId id : pop_.alive_ids()) observe(id, obs.data() + (id - 1) * len);
  return obs;
}

std::string LbfEnv::state_digest() const {
  std::ostringstream ss;
  ss << "t=" << step_count_ << ";cap=" << pop_.ceiling() << ";agents=";
  for (AgentId id = 1; id <= max_agents_; ++id) {
    if (!pop_.is_alive(id)) {
      ss << "-,";
      continue;
    }
    ss << agent_r_[id] << ":" << agent_c_[id] << "L" << levels_[id - 1] << "+"
       << pop_.children_count(id) << ",";
  }
  ss << "foods=";
  for (const Food& f : foods_) {
    if (f.alive)
      ss << f.r << ":" << f.c << "L" << f.level << ",";
    else
      ss << "-,";
  }
  ss << "prev=";
  for (int a : prev_actions_) ss << a;
  return ss.str();
}

std::string LbfEnv::render() const {
  std::string out;
  for (int r = 0; r < grid_; ++r) {
    for (int c = 0; c < grid_; ++c) {
      int v = cell(r, c);
      if (v == 0)
        out += '.';
      else if (v > 0)
        out += static_cast<char>('0' + v);
      else
        out += static_cast<char>('a' + foods_[~v].level - 1);
    }
    out += '\n';
  }
  return out;
}

}  // namespace fluidrl
