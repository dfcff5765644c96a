#include "fluidrl/env/puddle_bridge.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fluidrl {
namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("puddle_bridge: cannot open map file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_rows(const std::string& text) {
  std::vector<std::string> rows;
  std::string row;
  for (char ch : text) {
    if (ch == '/' || ch == '\n') {
      if (!row.empty()) rows.push_back(row);
      row.clear();
    } else if (ch != '\r' && ch != ' ') {
      row.push_back(ch);
    }
  }
  if (!row.empty()) rows.push_back(row);
  return rows;
}

}  // namespace

const char* PuddleBridgeEnv::builtin_map() {
  return
      "....#...\n"
      ".S..#...\n"
      "....G...\n"
      "....#..F\n"
      "....#...\n"
      "....##..\n"
      "....~~..\n"
      "....#...\n";
}

PuddleBridgeEnv::PuddleBridgeEnv(const Config& cfg) {
  cfg.validate_keys({"env", "map", "map_file", "c_spawn", "c_step",
                     "max_agents", "initial_agents", "horizon", "gate_prob"});
  std::string text;
  if (cfg.has("map") && cfg.has("map_file"))
    throw std::runtime_error("puddle_bridge: give map or map_file, not both");
  if (cfg.has("map_file"))
    text = slurp(cfg.get_str("map_file"));
  else
    text = cfg.get_str("map", builtin_map());

  std::vector<std::string> rows = split_rows(text);
  if (static_cast<int>(rows.size()) != kSide)
    throw std::runtime_error("puddle_bridge: map must have 8 rows");
  tiles_.assign(kCells, kLand);
  std::string canon;
  for (int r = 0; r < kSide; ++r) {
    if (static_cast<int>(rows[r].size()) != kSide)
      throw std::runtime_error("puddle_bridge: map rows must have 8 cells");
    for (int c = 0; c < kSide; ++c) {
      char ch = rows[r][c];
      int i = r * kSide + c;
      switch (ch) {
        case '.': tiles_[i] = kLand; break;
        case '#': tiles_[i] = kWall; break;
        case 'G': tiles_[i] = kGate; break;
        case '~': tiles_[i] = kPuddle; puddle_idx_.push_back(i); break;
        case 'S':
          if (spawn_idx_ >= 0)
            throw std::runtime_error("puddle_bridge: multiple spawn cells");
          tiles_[i] = kSpawnCell;
          spawn_idx_ = i;
          break;
        case 'F':
          if (goal_idx_ >= 0)
            throw std::runtime_error("puddle_bridge: multiple goal cells");
          tiles_[i] = kGoal;
          goal_idx_ = i;
          break;
        default:
          throw std::runtime_error(std::string("puddle_bridge: bad map char '") + ch + "'");
      }
    }
    canon += rows[r];
    canon += '\n';
  }
  if (spawn_idx_ < 0) throw std::runtime_error("puddle_bridge: map has no spawn cell");
  if (goal_idx_ < 0) throw std::runtime_error("puddle_bridge: map has no goal cell");
  map_text_ = canon;

  max_agents_ = cfg.get_int("max_agents", 4);
  initial_agents_ = cfg.get_int("initial_agents", 1);
  c_spawn_ = cfg.get_double("c_spawn", 1.0);
  c_step_ = cfg.get_double("c_step", 0.1);
  horizon_ = cfg.get_int("horizon", 100);
  gate_prob_ = cfg.get_double("gate_prob", 0.5);
  if (max_agents_ < 1 || max_agents_ > 9)
    throw std::runtime_error("puddle_bridge: max_agents must be in 1..9");
  if (initial_agents_ < 1 || initial_agents_ > max_agents_)
    throw std::runtime_error("puddle_bridge: initial_agents out of range");

  auto [sr, sc] = from_index(spawn_idx_);
  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  for (int d = 0; d < 4; ++d) {
    int r = sr + dr[d], c = sc + dc[d];
    if (in_bounds(r, c) && tiles_[r * kSide + c] == kLand)
      spawn_adj_.push_back(r * kSide + c);
  }
  if (initial_agents_ - 1 > static_cast<int>(spawn_adj_.size()))
    throw std::runtime_error(
        "puddle_bridge: initial agents exceed spawn-adjacent free cells");

  pop_ = PopulationState(max_agents_, max_agents_);
}

std::vector<double> PuddleBridgeEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  int ceiling = ceiling_override_ > 0 ? std::min(ceiling_override_, max_agents_)
                                      : max_agents_;
  int initial = initial_override_ > 0 ? initial_override_ : initial_agents_;
  ceiling_override_ = -1;  // overrides hold for exactly one episode
  initial_override_ = -1;
  initial = std::min(initial, ceiling);

  // Extra starters go on free land cells orthogonally adjacent to the spawn.
  std::vector<int> adj = spawn_adj_;
  auto [sr, sc] = from_index(spawn_idx_);
  if (initial - 1 > static_cast<int>(adj.size()))
    throw std::runtime_error(
        "puddle_bridge: initial agents exceed spawn-adjacent free cells");

  gate_open_ = rng_.bernoulli(gate_prob_);
  pop_ = PopulationState(max_agents_, ceiling);
  base_.assign(kCells, 0);
  top_.assign(kCells, 0);
  pos_r_.assign(max_agents_ + 1, -1);
  pos_c_.assign(max_agents_ + 1, -1);
  prev_actions_.assign(max_agents_, kDummy);
  step_count_ = 0;

  pop_.set_alive(1);
  base_[spawn_idx_] = 1;
  pos_r_[1] = sr;
  pos_c_[1] = sc;
  for (AgentId id = 2; id <= initial; ++id) {
    int pick = rng_.uniform_int(0, static_cast<int>(adj.size()) - 1);
    int cell = adj[pick];
    adj.erase(adj.begin() + pick);
    pop_.set_alive(id);
    base_[cell] = id;
    pos_r_[id] = cell / kSide;
    pos_c_[id] = cell % kSide;
  }
  return all_obs();
}

void PuddleBridgeEnv::leave_cell(AgentId id) {
  int i = pos_r_[id] * kSide + pos_c_[id];
  if (top_[i] == id) {
    top_[i] = 0;
  } else {
    // A bottom may only be leaving when its stack formed this same step
    // (pre-existing bottoms are locked); the top drops down.
    base_[i] = top_[i];
    top_[i] = 0;
  }
}

StepResult PuddleBridgeEnv::step(const JointAction& actions) {
  if (static_cast<int>(actions.size()) != max_agents_)
    throw std::runtime_error("puddle_bridge: joint action size mismatch");
  const std::vector<AgentId> alive_pre = pop_.alive_ids();

  // Bottom lock is decided from the pre-move stacks and holds all step.
  std::vector<char> locked(max_agents_ + 1, 0);
  for (int i : puddle_idx_)
    if (base_[i] != 0 && top_[i] != 0) locked[base_[i]] = 1;

  bool goal_reached = false;
  const int dr[5] = {0, -1, 1, 0, 0};
  const int dc[5] = {0, 0, 0, -1, 1};
  for (AgentId id : alive_pre) {
    int a = actions[id - 1];
    if (a < kNorth || a > kEast) continue;
    if (locked[id]) continue;
    int r = pos_r_[id], c = pos_c_[id];
    int nr = r + dr[a], nc = c + dc[a];
    if (!in_bounds(nr, nc)) continue;
    int ni = nr * kSide + nc;
    Tile tt = tiles_[ni];
    if (!passable(tt)) continue;
    bool from_puddle = tiles_[r * kSide + c] == kPuddle;
    if (tt == kPuddle) {
      int occ = (base_[ni] != 0) + (top_[ni] != 0);
      if (occ >= 2) continue;
      if (from_puddle && top_[r * kSide + c] != id) continue;
      leave_cell(id);
      if (base_[ni] == 0)
        base_[ni] = id;
      else
        top_[ni] = id;
    } else {
      if (base_[ni] != 0) continue;
      leave_cell(id);
      base_[ni] = id;
      if (tt == kGoal) goal_reached = true;
    }
    pos_r_[id] = nr;
    pos_c_[id] = nc;
  }

  std::vector<AgentId> spawners;
  for (AgentId id : alive_pre)
    if (actions[id - 1] == kSpawn) spawners.push_back(id);
  int spawns = resolve_spawns(pop_, spawners, [&](AgentId child, AgentId) {
    if (base_[spawn_idx_] != 0) return false;
    base_[spawn_idx_] = child;
    pos_r_[child] = spawn_idx_ / kSide;
    pos_c_[child] = spawn_idx_ % kSide;
    return true;
  });

  step_count_ += 1;
  StepResult res;
  res.rewards.assign(max_agents_, 0.0);
  const int n_alive = static_cast<int>(alive_pre.size());
  double r = (goal_reached ? 10.0 / n_alive : 0.0) -
             c_spawn_ * spawns / n_alive - c_step_;
  for (AgentId id : alive_pre) res.rewards[id - 1] = r;
  res.done = goal_reached || step_count_ >= horizon_;
  res.info.spawns = spawns;
  res.info.goal_reached = goal_reached;

  for (AgentId id = 1; id <= max_agents_; ++id)
    prev_actions_[id - 1] = pop_.is_alive(id) ? actions[id - 1] : kDummy;
  res.obs = all_obs();
  return res;
}

std::vector<double> PuddleBridgeEnv::all_obs() const {
  std::vector<double> out(static_cast<std::size_t>(max_agents_) *
                              observation_size(),
                          0.0);
  for (AgentId id = 1; id <= max_agents_; ++id)
    if (pop_.is_alive(id)) observe(id, out.data() + (id - 1) * observation_size());
  return out;
}

void PuddleBridgeEnv::observe(AgentId id, double* out) const {
  const double inv_n = 1.0 / max_agents_;
  // Six tile planes then the base-occupant plane. The gate cell reads as
  // wall while closed and as land while open, so the gate plane stays zero.
  for (int i = 0; i < kCells; ++i) {
    Tile t = tiles_[i];
    if (t == kGate) t = gate_open_ ? kLand : kWall;
    out[t * kCells + i] = 1.0;
    out[6 * kCells + i] = base_[i] * inv_n;
  }
  int k = 7 * kCells;
  for (int i : puddle_idx_) out[k++] = top_[i] * inv_n;
  out[k++] = pos_r_[id] / static_cast<double>(kSide);
  out[k++] = pos_c_[id] / static_cast<double>(kSide);
  out[k++] = id * inv_n;
  for (AgentId j = 1; j <= max_agents_; ++j) {
    int a = prev_actions_[j - 1];
    if (a >= kNone && a < kDummy) out[k + a] = 1.0;
    k += 6;
  }
  out[k] = pop_.ceiling() * inv_n;
}

std::string PuddleBridgeEnv::state_digest() const {
  std::ostringstream ss;
  ss << "t=" << step_count_ << ";gate=" << (gate_open_ ? 1 : 0)
     << ";cap=" << pop_.ceiling() << ";pos=";
  for (AgentId id = 1; id <= max_agents_; ++id) {
    if (!pop_.is_alive(id)) continue;
    int i = pos_r_[id] * kSide + pos_c_[id];
    ss << id << ":" << pos_r_[id] << "," << pos_c_[id]
       << (top_[i] == id ? "^" : "") << ";";
  }
  ss << "prev=";
  for (int a : prev_actions_) ss << a;
  return ss.str();
}

std::string PuddleBridgeEnv::render() const {
  std::ostringstream ss;
  for (int r = 0; r < kSide; ++r) {
    for (int c = 0; c < kSide; ++c) {
      int i = r * kSide + c;
      AgentId shown = top_[i] != 0 ? top_[i] : base_[i];
      if (shown != 0) {
        ss << static_cast<char>('0' + shown);
        continue;
      }
      switch (tiles_[i]) {
        case kLand: ss << '.'; break;
        case kWall: ss << '#'; break;
        case kGate: ss << (gate_open_ ? 'g' : 'G'); break;
        case kPuddle: ss << '~'; break;
        case kSpawnCell: ss << 'S'; break;
        case kGoal: ss << 'F'; break;
      }
    }
    ss << '\n';
  }
  for (int i : puddle_idx_)
    if (top_[i] != 0)
      ss << "stack " << i / kSide << "," << i % kSide << ": " << top_[i]
         << " over " << base_[i] << '\n';
  return ss.str();
}

}  // namespace fluidrl
