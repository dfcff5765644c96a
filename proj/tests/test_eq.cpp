#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "fluidrl/common/rng.hpp"
#include "fluidrl/eq/solve.hpp"
#include "fluidrl/eq/tabular.hpp"

using namespace fluidrl;

namespace {

const char* kPrisoners = R"(
game pd
agents 2
gamma 0.9
horizon 1
state s alive=1,2 actions=2,2   # action 1 defects
start s
r s 0 0 -> -1 -1
r s 1 0 -> 0 -10
r s 0 1 -> -10 0
r s 1 1 -> -8 -8
)";

const char* kSpawnGame = R"(
game spawn
agents 2
gamma 0.9
horizon 2
state solo alive=1 actions=2
state pair alive=1,2 actions=2,2
state end alive=- actions=-
start solo
t solo 0 -> solo:1
t solo 1 -> pair:1
r solo 1 -> -2
t pair 0 0 -> end:1
t pair 0 1 -> end:1
t pair 1 0 -> end:1
t pair 1 1 -> end:1
r pair 0 1 -> 0 1
r pair 1 0 -> 1 0
r pair 1 1 -> 10 10
)";

TabularGame::State make_state(int n_agents, std::string name, std::vector<int> alive,
                              std::vector<int> actions) {
  TabularGame::State st;
  st.name = std::move(name);
  st.alive = std::move(alive);
  st.n_actions = std::move(actions);
  st.n_joint = 1;
  for (int k : st.n_actions) st.n_joint *= k;
  st.trans.assign(st.n_joint, {});
  st.rewards.assign(st.n_joint, std::vector<double>(n_agents, 0.0));
  return st;
}

// Two-agent two-stage game with a random branch layer. Root transitions
// and all rewards are drawn continuously so payoff ties have measure zero.
TabularGame random_two_stage_game(Rng& rng) {
  TabularGame g;
  g.name = "rand";
  g.n_agents = 2;
  g.gamma = rng.uniform(0.8, 0.99);
  g.horizon = 2;
  g.start = 0;
  g.states.push_back(
      make_state(2, "s0", {1, 2}, {rng.uniform_int(2, 3), rng.uniform_int(2, 3)}));
  const std::vector<std::vector<int>> alive_opts = {{1}, {2}, {1, 2}};
  for (int i = 1; i <= 2; ++i) {
    auto alive = alive_opts[rng.uniform_int(0, 2)];
    std::vector<int> acts;
    for (size_t k = 0; k < alive.size(); ++k) acts.push_back(rng.uniform_int(2, 3));
    g.states.push_back(make_state(2, "s" + std::to_string(i), alive, acts));
  }
  auto& root = g.states[0];
  root.absorbing = false;
  for (int j = 0; j < root.n_joint; ++j) {
    int pick = rng.uniform_int(0, 2);
    if (pick < 2)
      root.trans[j] = {{pick + 1, 1.0}};
    else
      root.trans[j] = {{1, 0.5}, {2, 0.5}};
    for (int id : root.alive) root.rewards[j][id - 1] = rng.uniform(-2.0, 2.0);
  }
  for (int s = 1; s <= 2; ++s)
    for (int j = 0; j < g.states[s].n_joint; ++j)
      for (int id : g.states[s].alive)
        g.states[s].rewards[j][id - 1] = rng.uniform(-2.0, 2.0);
  return g;
}

// Per-agent values when every decision point plays the fixed joint action.
std::vector<std::vector<std::vector<double>>> pure_values(
    const TabularGame& g, const std::vector<std::vector<int>>& joint) {
  int S = (int)g.states.size();
  std::vector<std::vector<std::vector<double>>> vals(
      g.horizon + 1,
      std::vector<std::vector<double>>(S, std::vector<double>(g.n_agents, 0.0)));
  for (int t = g.horizon - 1; t >= 0; --t)
    for (int s = 0; s < S; ++s) {
      const auto& st = g.states[s];
      int j = joint[t][s];
      for (int i = 0; i < g.n_agents; ++i) {
        double v = st.rewards[j][i];
        if (!st.absorbing)
          for (auto [s2, p] : st.trans[j]) v += g.gamma * p * vals[t + 1][s2][i];
        vals[t][s][i] = v;
      }
    }
  return vals;
}

// One-shot deviation test at every stage and state.
bool is_pure_spne(const TabularGame& g, const std::vector<std::vector<int>>& joint) {
  auto vals = pure_values(g, joint);
  for (int t = 0; t < g.horizon; ++t)
    for (int s = 0; s < (int)g.states.size(); ++s) {
      const auto& st = g.states[s];
      auto acts = g.split_joint(s, joint[t][s]);
      for (size_t k = 0; k < st.alive.size(); ++k) {
        int id = st.alive[k];
        for (int a = 0; a < st.n_actions[k]; ++a) {
          if (a == acts[k]) continue;
          auto dev = acts;
          dev[k] = a;
          int jd = g.join_actions(s, dev);
          double v = st.rewards[jd][id - 1];
          if (!st.absorbing)
            for (auto [s2, p] : st.trans[jd])
              v += g.gamma * p * vals[t + 1][s2][id - 1];
          if (v > vals[t][s][id - 1] + 1e-9) return false;
        }
      }
    }
  return true;
}

std::vector<std::vector<std::vector<int>>> enumerate_pure_spne(const TabularGame& g) {
  int S = (int)g.states.size();
  std::vector<int> radix;
  for (int t = 0; t < g.horizon; ++t)
    for (int s = 0; s < S; ++s) radix.push_back(g.states[s].n_joint);
  std::vector<std::vector<std::vector<int>>> found;
  std::vector<int> counter(radix.size(), 0);
  while (true) {
    std::vector<std::vector<int>> joint(g.horizon, std::vector<int>(S));
    for (int t = 0; t < g.horizon; ++t)
      for (int s = 0; s < S; ++s) joint[t][s] = counter[t * S + s];
    if (is_pure_spne(g, joint)) found.push_back(joint);
    int pos = 0;
    while (pos < (int)radix.size() && ++counter[pos] == radix[pos]) counter[pos++] = 0;
    if (pos == (int)radix.size()) break;
  }
  return found;
}

// Extracts the deterministic joint action per stage and state; fails if
// any distribution is not a point mass.
bool extract_pure(const TabularGame& g, const BehavioralStrategy& strat,
                  std::vector<std::vector<int>>& joint) {
  joint.assign(g.horizon, std::vector<int>((int)g.states.size(), 0));
  for (int t = 0; t < g.horizon; ++t)
    for (int s = 0; s < (int)g.states.size(); ++s) {
      const auto& dists = strat.stages[t][s];
      std::vector<int> acts(dists.size());
      for (size_t k = 0; k < dists.size(); ++k) {
        int best = 0;
        for (int a = 1; a < (int)dists[k].size(); ++a)
          if (dists[k][a] > dists[k][best]) best = a;
        if (dists[k][best] < 1.0 - 1e-9) return false;
        acts[k] = best;
      }
      joint[t][s] = g.join_actions(s, acts);
    }
  return true;
}

}  // namespace

TEST_CASE("game text parsing") {
  auto g = TabularGame::parse(kSpawnGame);
  CHECK(g.name == "spawn");
  CHECK(g.n_agents == 2);
  CHECK(g.horizon == 2);
  CHECK(g.states.size() == 3);
  CHECK(g.start == g.state_index("solo"));
  const auto& pair = g.states[g.state_index("pair")];
  CHECK(pair.alive == std::vector<int>{1, 2});
  CHECK(pair.n_joint == 4);
  CHECK_FALSE(pair.absorbing);
  CHECK(g.states[g.state_index("end")].absorbing);
  // joint index is least significant first in agent order
  int j = g.join_actions(g.state_index("pair"), {1, 0});
  CHECK(j == 1);
  CHECK(pair.rewards[j][0] == 1.0);
  CHECK(pair.rewards[j][1] == 0.0);
  CHECK(g.split_joint(g.state_index("pair"), 3) == std::vector<int>{1, 1});
  // dead slot of solo earns zero everywhere
  const auto& solo = g.states[g.state_index("solo")];
  CHECK(solo.rewards[1][0] == -2.0);
  CHECK(solo.rewards[1][1] == 0.0);
}

TEST_CASE("parser rejects malformed games") {
  auto bad = [](const std::string& text) {
    CHECK_THROWS_AS(TabularGame::parse(text), std::runtime_error);
  };
  bad("agents 2\ngamma 0.9\nstate s alive=1 actions=2\nt s 0 -> s:0.9\n");
  bad("agents 2\ngamma 0.9\nstate s alive=1 actions=2\nt s 0 -> s:1\nt s 0 -> s:1\n");
  bad("agents 2\ngamma 0.9\nstate s alive=1 actions=2\nt s 0 -> nowhere:1\n");
  bad("agents 2\ngamma 0.9\nstate s alive=1 actions=2\nr s 0 -> 1 2\n");
  bad("agents 2\ngamma 0.9\nstate s alive=2,1 actions=2,2\n");
  bad("agents 2\ngamma 0.9\nstate s alive=1,3 actions=2,2\n");
  bad("agents 2\ngamma 1.5\nstate s alive=1 actions=2\n");
  bad("state s alive=1 actions=2\n");
  // one joint action with a t line forces t lines for all of them
  bad("agents 1\ngamma 0.9\nstate s alive=1 actions=2\nt s 0 -> s:1\n");
  CHECK_THROWS_AS(TabularGame::load("/nonexistent/game.txt"), std::runtime_error);
}

TEST_CASE("one shot equilibria") {
  SUBCASE("dominant strategies") {
    auto g = TabularGame::parse(kPrisoners);
    const auto& st = g.states[0];
    std::vector<std::vector<std::vector<double>>> payoff(
        2, std::vector<std::vector<double>>(2, std::vector<double>(2)));
    for (int j = 0; j < st.n_joint; ++j) {
      auto acts = g.split_joint(0, j);
      for (int p = 0; p < 2; ++p) payoff[p][acts[0]][acts[1]] = st.rewards[j][p];
    }
    auto eq = stage_nash(payoff);
    CHECK(eq.strategy[0][1] == doctest::Approx(1.0));
    CHECK(eq.strategy[1][1] == doctest::Approx(1.0));
    CHECK(eq.value[0] == doctest::Approx(-8.0));
  }
  SUBCASE("zero sum mixing") {
    std::vector<std::vector<std::vector<double>>> mp = {
        {{1, -1}, {-1, 1}},
        {{-1, 1}, {1, -1}},
    };
    auto eq = stage_nash(mp);
    for (int p = 0; p < 2; ++p) {
      CHECK(eq.strategy[p][0] == doctest::Approx(0.5).epsilon(1e-9));
      CHECK(eq.value[p] == doctest::Approx(0.0).epsilon(1e-9));
    }
  }
  SUBCASE("cyclic three actions mix uniformly") {
    std::vector<std::vector<double>> u1 = {{0, -1, 1}, {1, 0, -1}, {-1, 1, 0}};
    std::vector<std::vector<double>> u2(3, std::vector<double>(3));
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) u2[a][b] = -u1[a][b];
    auto eq = stage_nash({u1, u2});
    for (int p = 0; p < 2; ++p)
      for (int a = 0; a < 3; ++a)
        CHECK(eq.strategy[p][a] == doctest::Approx(1.0 / 3).epsilon(1e-9));
  }
  SUBCASE("single player takes the first argmax") {
    std::vector<std::vector<std::vector<double>>> u = {
        {{0.3}, {2.5}, {2.5}, {1.0}}};
    auto eq = stage_nash(u);
    CHECK(eq.strategy[0] == std::vector<double>{0, 1, 0, 0});
    CHECK(eq.value[0] == 2.5);
  }
  SUBCASE("coordination picks the lowest indexed pure point") {
    std::vector<std::vector<std::vector<double>>> u = {
        {{3, 0}, {0, 2}},
        {{2, 0}, {0, 3}},
    };
    auto eq = stage_nash(u);
    CHECK(eq.strategy[0][0] == doctest::Approx(1.0));
    CHECK(eq.strategy[1][0] == doctest::Approx(1.0));
  }
  SUBCASE("size limits") {
    std::vector<std::vector<std::vector<double>>> five(
        2, std::vector<std::vector<double>>(5, std::vector<double>(5, 0.0)));
    CHECK_THROWS_AS(stage_nash(five), std::runtime_error);
    CHECK_THROWS_AS(stage_nash({}), std::runtime_error);
    std::vector<std::vector<std::vector<double>>> three(
        3, std::vector<std::vector<double>>(2, std::vector<double>(2, 0.0)));
    CHECK_THROWS_AS(stage_nash(three), std::runtime_error);
  }
}

TEST_CASE("turn order expansion") {
  SUBCASE("one mover gives depth one") {
    auto g = TabularGame::parse(
        "agents 1\ngamma 0.9\nhorizon 1\nstate s alive=1 actions=3\nstart s\n");
    auto sf = sequentialize(g);
    CHECK(sf.nodes.size() == 1);
    CHECK(sf.depth == 1);
    CHECK(sf.n_leaves == 3);
    CHECK(sf.n_info_sets == 1);
  }
  SUBCASE("two movers share the second info set") {
    auto g = TabularGame::parse(
        "agents 2\ngamma 0.9\nhorizon 1\nstate s alive=1,2 actions=2,2\nstart s\n");
    auto sf = sequentialize(g);
    CHECK(sf.nodes.size() == 3);
    CHECK(sf.depth == 2);
    CHECK(sf.n_leaves == 4);
    CHECK(sf.n_info_sets == 2);
    CHECK(sf.nodes[0].agent == 1);
    CHECK(sf.nodes[1].agent == 2);
    CHECK(sf.nodes[1].info_set == sf.nodes[2].info_set);
    CHECK(sf.nodes[0].info_set != sf.nodes[1].info_set);
  }
  SUBCASE("chance branches multiply leaves") {
    auto g = TabularGame::parse(kSpawnGame);
    auto sf = sequentialize(g);
    // solo stage 0: stay revisits solo (2 leaves at stage 1), spawn
    // reaches pair (4 leaves); depth is 1 + 2 movers
    CHECK(sf.n_leaves == 6);
    CHECK(sf.depth == 3);
    // each fresh stage occurrence starts with a singleton info set
    int stage1_pair_first = 0;
    for (const auto& n : sf.nodes)
      if (n.stage == 1 && n.agent == 1 &&
          n.state == g.state_index("pair"))
        ++stage1_pair_first;
    CHECK(stage1_pair_first == 1);
  }
  SUBCASE("infinite horizon is rejected") {
    auto g = TabularGame::parse(
        "agents 1\ngamma 0.9\nstate s alive=1 actions=2\nt s 0 -> s:1\nt s 1 -> s:1\n");
    CHECK_THROWS_AS(sequentialize(g), std::runtime_error);
  }
}

TEST_CASE("spawn game backward induction") {
  auto g = TabularGame::parse(kSpawnGame);
  auto res = backward_induction_spne(g);
  int solo = g.state_index("solo"), pair = g.state_index("pair");

  // last stage: the pair coordinates on the high joint action, a lone
  // agent does not pay the spawn cost with nothing left to gain
  CHECK(res.strategy.stages[1][pair][0][1] == doctest::Approx(1.0));
  CHECK(res.strategy.stages[1][pair][1][1] == doctest::Approx(1.0));
  CHECK(res.strategy.stages[1][solo][0][0] == doctest::Approx(1.0));
  CHECK(res.values[1][pair][0] == doctest::Approx(10.0));

  // first stage: -2 now buys 0.9 * 10 later, so the agent spawns
  CHECK(res.strategy.stages[0][solo][0][1] == doctest::Approx(1.0));
  CHECK(res.values[0][solo][0] == doctest::Approx(-2.0 + 0.9 * 10.0));
  CHECK(res.values[0][solo][1] == doctest::Approx(0.9 * 10.0));

  // raise the cost past the discounted gain and it stays alone
  auto costly = TabularGame::parse(kSpawnGame);
  costly.states[solo].rewards[1][0] = -9.5;
  auto res2 = backward_induction_spne(costly);
  CHECK(res2.strategy.stages[0][solo][0][0] == doctest::Approx(1.0));
  CHECK(res2.values[0][solo][0] == doctest::Approx(0.0));

  // the equilibrium check accepts the solution and rejects a perturbation
  CHECK(verify_nash(g, res.strategy, 1e-9).is_ne);
  auto bent = res.strategy;
  bent.stages[1][pair][0] = {0.1, 0.9};
  auto verdict = verify_nash(g, bent, 1e-9);
  CHECK_FALSE(verdict.is_ne);
  CHECK(verdict.worst_gain == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(verdict.agent == 1);
}

TEST_CASE("single stage induction matches the one shot solution") {
  auto g = TabularGame::parse(kPrisoners);
  auto res = backward_induction_spne(g);
  CHECK(res.strategy.stages.size() == 1);
  CHECK(res.strategy.stages[0][0][0][1] == doctest::Approx(1.0));
  CHECK(res.strategy.stages[0][0][1][1] == doctest::Approx(1.0));
  CHECK(res.values[0][0][0] == doctest::Approx(-8.0));
  CHECK(res.values[0][0][1] == doctest::Approx(-8.0));
}

TEST_CASE("best response verification") {
  SUBCASE("optimal single agent policy has zero gain") {
    auto g = TabularGame::parse(
        "agents 1\ngamma 0.9\nhorizon inf\n"
        "state a alive=1 actions=2\nstate b alive=1 actions=1\nstart a\n"
        "t a 0 -> a:1\nt a 1 -> b:1\nt b 0 -> b:1\nr b 0 -> 1\n");
    StagePolicy go{{{0.0, 1.0}}, {{1.0}}};
    auto verdict = verify_nash(g, BehavioralStrategy{{go}}, 1e-9);
    CHECK(verdict.is_ne);
    CHECK(verdict.worst_gain <= 1e-9);

    StagePolicy stay{{{1.0, 0.0}}, {{1.0}}};
    auto bad = verify_nash(g, BehavioralStrategy{{stay}}, 1e-9);
    CHECK_FALSE(bad.is_ne);
    // foregone value of reaching b: gamma / (1 - gamma)
    CHECK(bad.worst_gain == doctest::Approx(9.0).epsilon(1e-6));
    CHECK(bad.state == 0);
  }
  SUBCASE("repeated zero sum mixing stays an equilibrium") {
    auto g = TabularGame::parse(
        "agents 2\ngamma 0.9\nhorizon inf\n"
        "state mp alive=1,2 actions=2,2\nstart mp\n"
        "t mp 0 0 -> mp:1\nt mp 1 0 -> mp:1\nt mp 0 1 -> mp:1\nt mp 1 1 -> mp:1\n"
        "r mp 0 0 -> 1 -1\nr mp 1 0 -> -1 1\nr mp 0 1 -> -1 1\nr mp 1 1 -> 1 -1\n");
    StagePolicy mix{{{0.5, 0.5}, {0.5, 0.5}}};
    CHECK(verify_nash(g, BehavioralStrategy{{mix}}, 1e-9).is_ne);
    StagePolicy tilt{{{0.7, 0.3}, {0.5, 0.5}}};
    // the opponent exploits the tilt
    auto verdict = verify_nash(g, BehavioralStrategy{{tilt}}, 1e-9);
    CHECK_FALSE(verdict.is_ne);
    CHECK(verdict.agent == 2);
  }
}

TEST_CASE("alive restricted accumulation matches the full backup") {
  auto g = TabularGame::parse(kSpawnGame);
  BehavioralStrategy uniform{{uniform_stage_policy(g), uniform_stage_policy(g)}};
  auto full = policy_value(g, uniform);
  auto fluid = policy_value_fluid(g, uniform);
  for (int t = 0; t <= g.horizon; ++t)
    for (size_t s = 0; s < g.states.size(); ++s)
      for (int i = 0; i < g.n_agents; ++i)
        CHECK(full[t][s][i] == fluid[t][s][i]);

  // hand rolled numbers for the uniform policy
  int solo = g.state_index("solo");
  CHECK(full[0][solo][0] == doctest::Approx(-0.2125).epsilon(1e-12));
  CHECK(full[0][solo][1] == doctest::Approx(1.2375).epsilon(1e-12));

  Rng rng(31);
  for (int rep = 0; rep < 30; ++rep) {
    auto game = random_two_stage_game(rng);
    // random behavioral policy, different per stage
    BehavioralStrategy pol;
    for (int t = 0; t < game.horizon; ++t) {
      auto sp = uniform_stage_policy(game);
      for (auto& dists : sp)
        for (auto& d : dists) {
          double total = 0.0;
          for (auto& p : d) total += (p = rng.uniform(0.01, 1.0));
          for (auto& p : d) p /= total;
        }
      pol.stages.push_back(sp);
    }
    auto a = policy_value(game, pol);
    auto b = policy_value_fluid(game, pol);
    for (int t = 0; t <= game.horizon; ++t)
      for (size_t s = 0; s < game.states.size(); ++s)
        for (int i = 0; i < game.n_agents; ++i) CHECK(a[t][s][i] == b[t][s][i]);
  }
}

TEST_CASE("induction agrees with exhaustive profile search") {
  Rng rng(1234);
  int tested = 0, attempts = 0;
  while (tested < 8 && attempts < 200) {
    ++attempts;
    auto g = random_two_stage_game(rng);
    auto oracle = enumerate_pure_spne(g);
    if (oracle.empty()) continue;
    auto res = backward_induction_spne(g);
    std::vector<std::vector<int>> mine;
    if (!extract_pure(g, res.strategy, mine)) continue;

    bool found = false;
    for (const auto& prof : oracle)
      if (prof == mine) found = true;
    CHECK(found);

    auto vals = pure_values(g, mine);
    for (int t = 0; t <= g.horizon; ++t)
      for (size_t s = 0; s < g.states.size(); ++s)
        for (int i = 0; i < g.n_agents; ++i)
          CHECK(res.values[t][s][i] == doctest::Approx(vals[t][s][i]).epsilon(1e-9));

    CHECK(verify_nash(g, res.strategy, 1e-9).is_ne);
    ++tested;
  }
  CHECK(tested == 8);
}

TEST_CASE("stationary policy evaluation") {
  auto g = TabularGame::parse(
      "agents 1\ngamma 0.9\nhorizon inf\n"
      "state s alive=1 actions=1\nstart s\nt s 0 -> s:1\nr s 0 -> 1\n");
  auto v = policy_value_stationary(g, uniform_stage_policy(g));
  CHECK(v[0][0] == doctest::Approx(10.0).epsilon(1e-9));
  // finite horizon evaluation refuses infinite games
  CHECK_THROWS_AS(policy_value(g, BehavioralStrategy{{uniform_stage_policy(g)}}),
                  std::runtime_error);
  CHECK_THROWS_AS(backward_induction_spne(g), std::runtime_error);
}
