#include "fluidrl/eq/solve.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace fluidrl {

namespace {

constexpr double kDevTol = 1e-9;

// Gaussian elimination with partial pivoting. Returns false on a pivot
// smaller than 1e-12 in magnitude.
bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b,
                  std::vector<double>& x) {
  int n = (int)b.size();
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-12) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < n; ++r) {
      double f = a[r][col] / a[col][col];
      if (f == 0.0) continue;
      for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  x.assign(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double acc = b[r];
    for (int c = r + 1; c < n; ++c) acc -= a[r][c] * x[c];
    x[r] = acc / a[r][r];
  }
  return true;
}

std::vector<std::vector<int>> subsets_of_size(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int from) {
    if ((int)cur.size() == k) {
      out.push_back(cur);
      return;
    }
    for (int i = from; i <= n - (k - (int)cur.size()); ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

// Mix for the row player over support making the column player indifferent
// across opp_support under payoff "opp" (opp[row][col] = column player's
// payoff). Fails on singular systems or clearly negative weights.
bool indifference_mix(const std::vector<std::vector<double>>& opp,
                      const std::vector<int>& support,
                      const std::vector<int>& opp_support,
                      std::vector<double>& mix) {
  int k = (int)support.size();
  if (k == 1) {
    mix = {1.0};
    return true;
  }
  // unknowns: k weights plus the common payoff w
  std::vector<std::vector<double>> a(k + 1, std::vector<double>(k + 1, 0.0));
  std::vector<double> b(k + 1, 0.0);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < k; ++i) a[j][i] = opp[support[i]][opp_support[j]];
    a[j][k] = -1.0;
  }
  for (int i = 0; i < k; ++i) a[k][i] = 1.0;
  b[k] = 1.0;
  std::vector<double> sol;
  if (!solve_linear(a, b, sol)) return false;
  mix.assign(sol.begin(), sol.begin() + k);
  double total = 0.0;
  for (double& m : mix) {
    if (m < -kDevTol) return false;
    m = std::max(m, 0.0);
    total += m;
  }
  if (total <= 0.0) return false;
  for (double& m : mix) m /= total;
  return true;
}

}  // namespace

StageNash stage_nash(const std::vector<std::vector<std::vector<double>>>& payoff) {
  int m = (int)payoff.size();
  if (m < 1 || m > 2) throw std::runtime_error("stage_nash: need one or two players");
  int k1 = (int)payoff[0].size();
  if (k1 < 1 || k1 > 4) throw std::runtime_error("stage_nash: need 1..4 actions");
  int k2 = (int)payoff[0][0].size();
  for (const auto& u : payoff)
    for (const auto& row : u)
      if ((int)row.size() != k2) throw std::runtime_error("stage_nash: ragged payoff");

  if (m == 1) {
    if (k2 != 1) throw std::runtime_error("stage_nash: single player expects one column");
    int best = 0;
    for (int a = 1; a < k1; ++a)
      if (payoff[0][a][0] > payoff[0][best][0]) best = a;
    StageNash out;
    out.strategy.push_back(std::vector<double>(k1, 0.0));
    out.strategy[0][best] = 1.0;
    out.value = {payoff[0][best][0]};
    return out;
  }

  if (k2 < 1 || k2 > 4) throw std::runtime_error("stage_nash: need 1..4 actions");
  const auto& u1 = payoff[0];
  const auto& u2 = payoff[1];

  for (int size = 1; size <= std::min(k1, k2); ++size) {
    for (const auto& s1 : subsets_of_size(k1, size)) {
      for (const auto& s2 : subsets_of_size(k2, size)) {
        std::vector<double> xs, ys;
        if (!indifference_mix(u2, s1, s2, xs)) continue;
        // player 0's indifference over s1 is driven by u1 transposed
        std::vector<std::vector<double>> u1t(k2, std::vector<double>(k1));
        for (int a = 0; a < k1; ++a)
          for (int b = 0; b < k2; ++b) u1t[b][a] = u1[a][b];
        if (!indifference_mix(u1t, s2, s1, ys)) continue;

        std::vector<double> x(k1, 0.0), y(k2, 0.0);
        for (int i = 0; i < size; ++i) x[s1[i]] = xs[i];
        for (int i = 0; i < size; ++i) y[s2[i]] = ys[i];

        double v1 = 0.0, v2 = 0.0;
        for (int a = 0; a < k1; ++a)
          for (int b = 0; b < k2; ++b) {
            v1 += x[a] * y[b] * u1[a][b];
            v2 += x[a] * y[b] * u2[a][b];
          }
        double dev1 = -1e300, dev2 = -1e300;
        for (int a = 0; a < k1; ++a) {
          double q = 0.0;
          for (int b = 0; b < k2; ++b) q += y[b] * u1[a][b];
          dev1 = std::max(dev1, q);
        }
        for (int b = 0; b < k2; ++b) {
          double q = 0.0;
          for (int a = 0; a < k1; ++a) q += x[a] * u2[a][b];
          dev2 = std::max(dev2, q);
        }
        if (dev1 > v1 + kDevTol || dev2 > v2 + kDevTol) continue;
        return {{x, y}, {v1, v2}};
      }
    }
  }
  throw std::runtime_error(
      "stage_nash: support enumeration exhausted, no candidate within 1e-9");
}

namespace {

// Expected immediate plus discounted continuation payoff of agent id at
// state s for each joint action, given the next value layer.
std::vector<double> stage_payoffs(const TabularGame& game, int s, int id,
                                  const std::vector<std::vector<double>>& next) {
  const auto& st = game.states[s];
  std::vector<double> q(st.n_joint);
  for (int j = 0; j < st.n_joint; ++j) {
    double v = st.rewards[j][id - 1];
    if (!st.absorbing)
      for (auto [s2, p] : st.trans[j]) v += game.gamma * p * next[s2][id - 1];
    q[j] = v;
  }
  return q;
}

void backup_values(const TabularGame& game, int s,
                   const std::vector<std::vector<double>>& dists,
                   const std::vector<std::vector<double>>& next,
                   std::vector<double>& out) {
  const auto& st = game.states[s];
  auto jd = joint_distribution(game, s, dists);
  out.assign(game.n_agents, 0.0);
  for (int j = 0; j < st.n_joint; ++j) {
    if (jd[j] <= 0.0) continue;
    for (int i = 0; i < game.n_agents; ++i) out[i] += jd[j] * st.rewards[j][i];
    if (!st.absorbing)
      for (auto [s2, p] : st.trans[j]) {
        double w = jd[j] * p * game.gamma;
        for (int i = 0; i < game.n_agents; ++i) out[i] += w * next[s2][i];
      }
  }
}

}  // namespace

SpneResult backward_induction_spne(const TabularGame& game) {
  if (game.horizon < 1)
    throw std::runtime_error("backward_induction_spne: finite horizon required");
  int h = game.horizon;
  int n_states = (int)game.states.size();

  SpneResult res;
  res.values.assign(h + 1, std::vector<std::vector<double>>(
                               n_states, std::vector<double>(game.n_agents, 0.0)));
  res.strategy.stages.assign(h, StagePolicy(n_states));

  for (int t = h - 1; t >= 0; --t) {
    for (int s = 0; s < n_states; ++s) {
      const auto& st = game.states[s];
      int m = (int)st.alive.size();
      if (m > 2)
        throw std::runtime_error("backward_induction_spne: state " + st.name +
                                 " has more than two alive agents");
      auto& dists = res.strategy.stages[t][s];
      dists.resize(m);
      if (m > 0) {
        int k1 = st.n_actions[0];
        int k2 = m == 2 ? st.n_actions[1] : 1;
        std::vector<std::vector<std::vector<double>>> payoff(
            m, std::vector<std::vector<double>>(k1, std::vector<double>(k2)));
        for (int p = 0; p < m; ++p) {
          auto q = stage_payoffs(game, s, st.alive[p], res.values[t + 1]);
          for (int j = 0; j < st.n_joint; ++j) {
            auto acts = game.split_joint(s, j);
            payoff[p][acts[0]][m == 2 ? acts[1] : 0] = q[j];
          }
        }
        auto eq = stage_nash(payoff);
        for (int p = 0; p < m; ++p) dists[p] = eq.strategy[p];
      }
      backup_values(game, s, dists, res.values[t + 1], res.values[t][s]);
    }
  }
  return res;
}

namespace {

// Best achievable value for one agent at state s given everyone else plays
// the stage policy and next holds the agent's continuation values.
double best_response_at(const TabularGame& game, int s, int id,
                        const StagePolicy& pol, const std::vector<double>& next) {
  const auto& st = game.states[s];
  int mine = -1;
  for (size_t k = 0; k < st.alive.size(); ++k)
    if (st.alive[k] == id) mine = (int)k;

  auto cont = [&](int j) {
    double v = st.rewards[j][id - 1];
    if (!st.absorbing)
      for (auto [s2, p] : st.trans[j]) v += game.gamma * p * next[s2];
    return v;
  };

  if (mine < 0) {
    auto jd = joint_distribution(game, s, pol[s]);
    double v = 0.0;
    for (int j = 0; j < st.n_joint; ++j)
      if (jd[j] > 0.0) v += jd[j] * cont(j);
    return v;
  }

  std::vector<double> q(st.n_actions[mine], 0.0);
  for (int j = 0; j < st.n_joint; ++j) {
    auto acts = game.split_joint(s, j);
    double p_others = 1.0;
    for (size_t k = 0; k < acts.size(); ++k)
      if ((int)k != mine) p_others *= pol[s][k][acts[k]];
    if (p_others > 0.0) q[acts[mine]] += p_others * cont(j);
  }
  return *std::max_element(q.begin(), q.end());
}

}  // namespace

NashVerdict verify_nash(const TabularGame& game, const BehavioralStrategy& policy,
                        double tol) {
  if (policy.stages.empty()) throw std::runtime_error("verify_nash: empty policy");
  NashVerdict verdict;
  int n_states = (int)game.states.size();

  auto consider = [&](double gain, int id, int t, int s) {
    if (gain > verdict.worst_gain) {
      verdict.worst_gain = gain;
      verdict.agent = id;
      verdict.stage = t;
      verdict.state = s;
    }
  };

  if (game.horizon >= 1) {
    auto vals = policy_value(game, policy);
    for (int id = 1; id <= game.n_agents; ++id) {
      std::vector<double> next(n_states, 0.0), cur(n_states, 0.0);
      for (int t = game.horizon - 1; t >= 0; --t) {
        const auto& pol = policy.at_stage(t);
        for (int s = 0; s < n_states; ++s) {
          cur[s] = best_response_at(game, s, id, pol, next);
          consider(cur[s] - vals[t][s][id - 1], id, t, s);
        }
        std::swap(cur, next);
      }
    }
  } else {
    if (policy.stages.size() != 1)
      throw std::runtime_error("verify_nash: infinite horizon needs a stationary policy");
    const auto& pol = policy.stages[0];
    auto vals = policy_value_stationary(game, pol);
    for (int id = 1; id <= game.n_agents; ++id) {
      std::vector<double> next(n_states, 0.0), cur(n_states, 0.0);
      for (int iter = 0; iter < 2000000; ++iter) {
        double delta = 0.0;
        for (int s = 0; s < n_states; ++s) {
          cur[s] = best_response_at(game, s, id, pol, next);
          delta = std::max(delta, std::abs(cur[s] - next[s]));
        }
        std::swap(cur, next);
        if (delta < 1e-12) break;
        if (iter == 1999999)
          throw std::runtime_error("verify_nash: best response iteration stalled");
      }
      for (int s = 0; s < n_states; ++s)
        consider(next[s] - vals[s][id - 1], id, -1, s);
    }
  }
  verdict.is_ne = verdict.worst_gain <= tol;
  return verdict;
}

SequentialForm sequentialize(const TabularGame& game) {
  if (game.horizon < 1)
    throw std::runtime_error("sequentialize: finite horizon required");
  SequentialForm sf;
  constexpr int kMaxNodes = 1000000;

  // expand_stage walks the movers of one stage occurrence, then chance.
  std::function<int(int, int, int)> expand_state;
  std::function<int(int, int, int, int, std::vector<int>&, const std::vector<int>&)>
      expand_stage;

  expand_state = [&](int t, int s, int depth) -> int {
    if (t == game.horizon) {
      ++sf.n_leaves;
      return depth;
    }
    const auto& st = game.states[s];
    std::vector<int> infos(st.alive.size());
    for (size_t k = 0; k < st.alive.size(); ++k) infos[k] = sf.n_info_sets++;
    std::vector<int> acts;
    return expand_stage(t, s, 0, depth, acts, infos);
  };

  expand_stage = [&](int t, int s, int k, int depth, std::vector<int>& acts,
                     const std::vector<int>& infos) -> int {
    const auto& st = game.states[s];
    if (k == (int)st.alive.size()) {
      if (st.absorbing) {
        ++sf.n_leaves;
        return depth;
      }
      int joint = game.join_actions(s, acts);
      int deepest = depth;
      for (auto [s2, p] : st.trans[joint]) {
        (void)p;
        deepest = std::max(deepest, expand_state(t + 1, s2, depth));
      }
      return deepest;
    }
    if ((int)sf.nodes.size() >= kMaxNodes)
      throw std::runtime_error("sequentialize: game tree too large");
    sf.nodes.push_back({t, s, st.alive[k], infos[k]});
    int deepest = depth;
    for (int a = 0; a < st.n_actions[k]; ++a) {
      acts.push_back(a);
      deepest = std::max(deepest, expand_stage(t, s, k + 1, depth + 1, acts, infos));
      acts.pop_back();
    }
    return deepest;
  };

  sf.depth = expand_state(0, game.start, 0);
  return sf;
}

}  // namespace fluidrl
