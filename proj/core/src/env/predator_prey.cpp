#include "fluidrl/env/predator_prey.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace fluidrl {

namespace {
// Row/col deltas for kNorth..kEast. Rows grow downward.
constexpr int kDr[4] = {-1, 1, 0, 0};
constexpr int kDc[4] = {0, 0, -1, 1};
}  // namespace

PredatorPreyEnv::PredatorPreyEnv(const Config& cfg) {
  cfg.validate_keys({"env", "grid_size", "n_prey", "prey_choices",
                     "max_agents", "initial_agents", "prey_capture_reward",
                     "c_spawn", "c_step", "payoff", "horizon", "layout"});
  grid_ = cfg.get_int("grid_size", 9);
  n_prey_ = cfg.get_int("n_prey", 6);
  if (cfg.has("prey_choices")) prey_choices_ = cfg.get_int_list("prey_choices");
  max_agents_ = cfg.get_int("max_agents", 6);
  initial_agents_ = cfg.get_int("initial_agents", 2);
  P_ = cfg.get_double("prey_capture_reward", 5.0);
  c_spawn_ = cfg.get_double("c_spawn", 2.0);
  c_step_ = cfg.get_double("c_step", 0.01);
  std::string payoff = cfg.get_str("payoff", "sip");
  if (payoff == "sip") {
    sip_ = true;
  } else if (payoff == "scp") {
    sip_ = false;
  } else {
    throw std::runtime_error("predator_prey: payoff must be scp or sip, got " +
                             payoff);
  }
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
    for (int r = 0; r < grid_; ++r) {
      if (static_cast<int>(rows[r].size()) != grid_)
        throw std::runtime_error("predator_prey: layout is not square");
      for (int c = 0; c < grid_; ++c) {
        char ch = rows[r][c];
        if (ch == '.') continue;
        if (ch == 'x') {
          layout_.push_back({r, c, ~layout_preys_});
          ++layout_preys_;
        } else if (ch >= '1' && ch <= '9') {
          layout_.push_back({r, c, ch - '0'});
          ++layout_preds_;
        } else {
          throw std::runtime_error(
              "predator_prey: layout char must be one of . x 1-9");
        }
      }
    }
    std::vector<bool> seen(layout_preds_ + 1, false);
    for (const LayoutCell& lc : layout_)
      if (lc.code > 0) {
        if (lc.code > layout_preds_ || seen[lc.code])
          throw std::runtime_error(
              "predator_prey: layout predator ids must be 1..k");
        seen[lc.code] = true;
      }
    if (layout_preds_ < 1 || layout_preds_ > max_agents_)
      throw std::runtime_error("predator_prey: layout predator count out of "
                               "range");
    initial_agents_ = layout_preds_;
    n_prey_ = layout_preys_;
    prey_choices_.clear();
  }

  if (grid_ < 2 || max_agents_ < 1 || initial_agents_ < 1 ||
      initial_agents_ > max_agents_)
    throw std::runtime_error("predator_prey: invalid geometry/population");
  max_preys_ = std::max(1, n_prey_);
  for (int c : prey_choices_) max_preys_ = std::max(max_preys_, c);
}

int PredatorPreyEnv::observation_size() const {
  return kWindow * kWindow * 3 + 2 + 1 + max_agents_ * 7 + 4;
}

bool PredatorPreyEnv::place_random_empty(int code, int* out_r, int* out_c) {
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
  return false;  // unreachable
}

std::vector<double> PredatorPreyEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  int ceiling = ceiling_override_ > 0 ? ceiling_override_ : max_agents_;
  int initial = initial_override_ > 0 ? initial_override_ : initial_agents_;
  bool forced_initial = initial_override_ > 0;
  ceiling_override_ = -1;  // overrides hold for exactly one episode
  initial_override_ = -1;
  if (ceiling > max_agents_ || initial > ceiling)
    throw std::runtime_error("predator_prey: initial agents / ceiling out of "
                             "range");
  pop_ = PopulationState(max_agents_, ceiling);
  occ_.assign(grid_ * grid_, 0);
  pred_r_.assign(max_agents_ + 1, 0);
  pred_c_.assign(max_agents_ + 1, 0);
  if (!layout_.empty()) {
    if (forced_initial && initial != layout_preds_)
      throw std::runtime_error(
          "predator_prey: initial agents fixed by layout");
    preys_.assign(layout_preys_, Prey{});
    for (const LayoutCell& lc : layout_) {
      cell(lc.r, lc.c) = lc.code;
      if (lc.code > 0) {
        pred_r_[lc.code] = lc.r;
        pred_c_[lc.code] = lc.c;
        pop_.set_alive(lc.code);
      } else {
        preys_[~lc.code] = Prey{lc.r, lc.c, true};
      }
    }
  } else {
    for (AgentId id = 1; id <= initial; ++id) {
      if (!place_random_empty(id, &pred_r_[id], &pred_c_[id]))
        throw std::runtime_error("predator_prey: grid too small for agents");
      pop_.set_alive(id);
    }
    int n_prey = prey_choices_.empty()
                     ? n_prey_
                     : prey_choices_[rng_.uniform_int(
                           0, static_cast<int>(prey_choices_.size()) - 1)];
    preys_.assign(n_prey, Prey{});
    for (int p = 0; p < n_prey; ++p) {
      if (!place_random_empty(~p, &preys_[p].r, &preys_[p].c))
        throw std::runtime_error("predator_prey: grid too small for preys");
      preys_[p].alive = true;
    }
  }
  prev_actions_.assign(max_agents_, kDummy);
  step_count_ = 0;
  return all_obs();
}

bool PredatorPreyEnv::adjacent_to_predator(int r, int c) const {
  for (int d = 0; d < 4; ++d) {
    int nr = r + kDr[d], nc = c + kDc[d];
    if (in_bounds(nr, nc) && cell(nr, nc) > 0) return true;
  }
  return false;
}

int PredatorPreyEnv::distinct_adjacent_predators(int r, int c) const {
  int n = 0;
  for (int d = 0; d < 4; ++d) {
    int nr = r + kDr[d], nc = c + kDc[d];
    if (in_bounds(nr, nc) && cell(nr, nc) > 0) ++n;
  }
  return n;
}

double PredatorPreyEnv::agent_reward(bool sip, double P, double c_spawn,
                                     double c_step, int alive_count,
                                     int captures, int spawns) {
  double payoff = sip ? P * captures / alive_count : P * captures;
  return payoff - (c_spawn * spawns / alive_count + c_step);
}

StepResult PredatorPreyEnv::step(const JointAction& actions) {
  StepResult res;
  res.rewards.assign(max_agents_, 0.0);
  std::vector<AgentId> alive_pre = pop_.alive_ids();

  // Phase 1: predator moves, ascending id, target empty at resolution time.
  for (AgentId id : alive_pre) {
    int a = actions[id - 1];
    if (a > kEast) continue;
    int nr = pred_r_[id] + kDr[a], nc = pred_c_[id] + kDc[a];
    if (!in_bounds(nr, nc) || cell(nr, nc) != 0) continue;
    cell(pred_r_[id], pred_c_[id]) = 0;
    cell(nr, nc) = id;
    pred_r_[id] = nr;
    pred_c_[id] = nc;
  }

  // Phase 2: spawns; child lands on a uniformly random empty cell.
  std::vector<AgentId> spawners;
  for (AgentId id : alive_pre)
    if (actions[id - 1] == kSpawn) spawners.push_back(id);
  int spawned = resolve_spawns(pop_, spawners, [&](AgentId child, AgentId) {
    return place_random_empty(child, &pred_r_[child], &pred_c_[child]);
  });

  // Phase 3: captures; a prey flanked by two or more predators is removed.
  int captures = 0;
  for (Prey& p : preys_) {
    if (!p.alive) continue;
    if (distinct_adjacent_predators(p.r, p.c) >= 2) {
      p.alive = false;
      cell(p.r, p.c) = 0;
      ++captures;
    }
  }

  // Phase 4: surviving preys move in prey-index order. A sampled move that
  // is blocked, out of bounds, or lands in a predator's capture range
  // degrades to a stay.
  for (Prey& p : preys_) {
    if (!p.alive) continue;
    int pick = sample_prey_move(rng_);
    if (pick == 0) continue;
    int nr = p.r + kDr[pick - 1], nc = p.c + kDc[pick - 1];
    if (!in_bounds(nr, nc) || cell(nr, nc) != 0) continue;
    if (adjacent_to_predator(nr, nc)) continue;
    std::swap(cell(p.r, p.c), cell(nr, nc));
    p.r = nr;
    p.c = nc;
  }

  // Phase 5: rewards for the pre-step alive set.
  double r = agent_reward(sip_, P_, c_spawn_, c_step_,
                          static_cast<int>(alive_pre.size()), captures,
                          spawned);
  for (AgentId id : alive_pre) res.rewards[id - 1] = r;

  ++step_count_;
  prev_actions_ = actions;
  res.info.spawns = spawned;
  res.info.captures = captures;
  res.done = preys_alive() == 0 || step_count_ >= horizon_;
  res.obs = all_obs();
  return res;
}

int PredatorPreyEnv::sample_prey_move(Rng& rng) {
  static const std::vector<double> kWeights{0.3, 0.175, 0.175, 0.175, 0.175};
  return rng.categorical(kWeights);
}

int PredatorPreyEnv::preys_alive() const {
  int n = 0;
  for (const Prey& p : preys_)
    if (p.alive) ++n;
  return n;
}

std::vector<std::pair<int, int>> PredatorPreyEnv::prey_positions() const {
  std::vector<std::pair<int, int>> out;
  for (const Prey& p : preys_)
    if (p.alive) out.emplace_back(p.r, p.c);
  return out;
}

void PredatorPreyEnv::observe(AgentId id, double* out) const {
  const int w = kWindow, rad = kWindow / 2, cells = w * w;
  double* pred_plane = out;
  double* prey_plane = out + cells;
  double* oob_plane = out + 2 * cells;
  int r0 = pred_r_[id], c0 = pred_c_[id];
  for (int dr = -rad; dr <= rad; ++dr) {
    for (int dc = -rad; dc <= rad; ++dc) {
      int idx = (dr + rad) * w + (dc + rad);
      int r = r0 + dr, c = c0 + dc;
      if (!in_bounds(r, c)) {
        oob_plane[idx] = 1.0;
        continue;
      }
      int v = cell(r, c);
      if (v > 0 && v != id) pred_plane[idx] = 1.0;  // self excluded
      if (v < 0) prey_plane[idx] = 1.0;
    }
  }
  double* tail = out + 3 * cells;
  *tail++ = static_cast<double>(r0) / grid_;
  *tail++ = static_cast<double>(c0) / grid_;
  *tail++ = static_cast<double>(id) / max_agents_;
  for (int j = 0; j < max_agents_; ++j) {
    tail[j * 7 + prev_actions_[j]] = 1.0;
  }
  tail += max_agents_ * 7;
  int child_den = std::max(1, max_agents_ - 1);
  *tail++ = static_cast<double>(pop_.children_count(id)) / child_den;
  *tail++ = static_cast<double>(preys_alive()) / max_preys_;
  *tail++ = static_cast<double>(pop_.alive_count()) / max_agents_;
  *tail++ = static_cast<double>(pop_.ceiling()) / max_agents_;
}

std::vector<double> PredatorPreyEnv::all_obs() const {
  int len = observation_size();
  std::vector<double> obs(max_agents_ * len, 0.0);
  for (AgentId id : pop_.alive_ids()) observe(id, obs.data() + (id - 1) * len);
  return obs;
}

std::vector<double> PredatorPreyEnv::global_state() const {
  std::vector<double> s(global_state_size(), 0.0);
  for (int i = 0; i < grid_ * grid_; ++i) {
    if (occ_[i] > 0) s[i] = 1.0;
    if (occ_[i] < 0) s[grid_ * grid_ + i] = 1.0;
  }
  double* tail = s.data() + 2 * grid_ * grid_;
  *tail++ = static_cast<double>(pop_.alive_count()) / max_agents_;
  *tail++ = static_cast<double>(preys_alive()) / max_preys_;
  *tail++ = static_cast<double>(pop_.ceiling()) / max_agents_;
  int child_den = std::max(1, max_agents_ - 1);
  for (AgentId id = 1; id <= max_agents_; ++id)
    *tail++ = static_cast<double>(pop_.children_count(id)) / child_den;
  return s;
}

std::string PredatorPreyEnv::state_digest() const {
  std::ostringstream ss;
  ss << "t=" << step_count_ << ";cap=" << pop_.ceiling() << ";pred=";
  for (AgentId id = 1; id <= max_agents_; ++id) {
    if (!pop_.is_alive(id)) {
      ss << "-,";
      continue;
    }
    ss << pred_r_[id] << ":" << pred_c_[id] << "+" << pop_.children_count(id)
       << ",";
  }
  ss << "prey=";
  for (const Prey& p : preys_) {
    if (p.alive)
      ss << p.r << ":" << p.c << ",";
    else
      ss << "-,";
  }
  ss << "prev=";
  for (int a : prev_actions_) ss << a;
  return ss.str();
}

std::string PredatorPreyEnv::render() const {
  std::string out;
  for (int r = 0; r < grid_; ++r) {
    for (int c = 0; c < grid_; ++c) {
      int v = cell(r, c);
      if (v == 0)
        out += '.';
      else if (v < 0)
        out += 'x';
      else
        out += static_cast<char>(v < 10 ? '0' + v : 'A' + v - 10);
    }
    out += '\n';
  }
  return out;
}

}  // namespace fluidrl
