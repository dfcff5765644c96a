#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "fluidrl/env/predator_prey.hpp"

using namespace fluidrl;

namespace {

Config pp_config(const std::string& layout, const std::string& payoff = "sip",
                 double c_spawn = 2.0, double c_step = 0.01) {
  Config cfg;
  cfg.set("layout", layout);
  cfg.set("max_agents", 4);
  cfg.set("payoff", payoff);
  cfg.set("prey_capture_reward", 5.0);
  cfg.set("c_spawn", c_spawn);
  cfg.set("c_step", c_step);
  return cfg;
}

JointAction acts(std::initializer_list<int> alive_actions, int n_slots,
                 int dummy) {
  JointAction a(n_slots, dummy);
  int id = 1;
  for (int v : alive_actions) a[id++ - 1] = v;
  return a;
}

}  // namespace

TEST_CASE("per-agent reward formula, both payoff modes") {
  // Size-inverse: two agents, one capture.
  CHECK(PredatorPreyEnv::agent_reward(true, 5.0, 0.0, 0.01, 2, 1, 0) ==
        doctest::Approx(2.49).epsilon(1e-12));
  // Size-constant: four agents, two captures, one spawn at cost 50.
  CHECK(PredatorPreyEnv::agent_reward(false, 5.0, 50.0, 0.01, 4, 2, 1) ==
        doctest::Approx(-2.51).epsilon(1e-12));
  CHECK(PredatorPreyEnv::agent_reward(false, 5.0, 50.0, 0.0, 3, 0, 0) == 0.0);

  // Joint capture payoff: SIP is population-invariant, SCP scales with it.
  for (int alive = 1; alive <= 10; ++alive) {
    double sip_joint = 0.0, scp_joint = 0.0;
    for (int i = 0; i < alive; ++i) {
      sip_joint += PredatorPreyEnv::agent_reward(true, 5.0, 0.0, 0.0, alive,
                                                 3, 0);
      scp_joint += PredatorPreyEnv::agent_reward(false, 5.0, 0.0, 0.0, alive,
                                                 3, 0);
    }
    CHECK(sip_joint == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(scp_joint == doctest::Approx(15.0 * alive).epsilon(1e-12));
  }
}

TEST_CASE("observation length matches the component sum") {
  for (int n_max : {1, 4, 10}) {
    Config cfg;
    cfg.set("max_agents", n_max);
    cfg.set("initial_agents", 1);
    PredatorPreyEnv env(cfg);
    CHECK(env.observation_size() == 11 * 11 * 3 + 2 + 1 + n_max * 7 + 4);
  }
}

TEST_CASE("prey flanked by two predators is captured") {
  // Prey at center, predators north and south of it.
  PredatorPreyEnv env(pp_config(".1.../.x.../.2.../...../....."));
  env.reset(1);
  CHECK(env.preys_alive() == 1);
  StepResult res = env.step(acts({PredatorPreyEnv::kNone,
                                  PredatorPreyEnv::kNone},
                                 4, env.dummy_action()));
  CHECK(res.info.captures == 1);
  CHECK(env.preys_alive() == 0);
  CHECK(res.done);  // last prey gone
  // SIP: 5 * 1 / 2 - 0.01 for both agents, zero for dead slots.
  CHECK(res.rewards[0] == doctest::Approx(2.49).epsilon(1e-12));
  CHECK(res.rewards[1] == doctest::Approx(2.49).epsilon(1e-12));
  CHECK(res.rewards[2] == 0.0);
  CHECK(res.rewards[3] == 0.0);
}

TEST_CASE("one adjacent predator does not capture") {
  PredatorPreyEnv env(pp_config(".1.../.x.../...../...../....."));
  env.reset(1);
  StepResult res =
      env.step(acts({PredatorPreyEnv::kNone}, 4, env.dummy_action()));
  CHECK(res.info.captures == 0);
  CHECK(env.preys_alive() == 1);
}

TEST_CASE("moves into occupied cells fail; lower id wins contested cells") {
  // 1 and 2 flank an empty cell and both move into it.
  PredatorPreyEnv env(pp_config("1.2../...../...../...../....x"));
  env.reset(1);
  env.step(acts({PredatorPreyEnv::kEast, PredatorPreyEnv::kWest}, 4,
                env.dummy_action()));
  std::string board = env.render();
  CHECK(board.substr(0, 5) == ".12..");  // 1 moved, 2 blocked

  // Off-board move is a no-op.
  PredatorPreyEnv edge(pp_config("1..../...../...../...../....x"));
  edge.reset(1);
  edge.step(acts({PredatorPreyEnv::kNorth}, 4, edge.dummy_action()));
  CHECK(edge.render().substr(0, 5) == "1....");
}

TEST_CASE("spawn adds an agent on an empty cell and charges the team") {
  PredatorPreyEnv env(pp_config("1..../...../...../...../....x"));
  env.reset(3);
  StepResult res =
      env.step(acts({PredatorPreyEnv::kSpawn}, 4, env.dummy_action()));
  CHECK(res.info.spawns == 1);
  CHECK(env.population().alive_ids() == std::vector<AgentId>{1, 2});
  CHECK(env.population().children_count(1) == 1);
  // Only agent 1 was alive pre-step: pays the whole spawn cost. The child
  // earns nothing on its birth step.
  CHECK(res.rewards[0] == doctest::Approx(-2.01).epsilon(1e-12));
  CHECK(res.rewards[1] == 0.0);
}

TEST_CASE("spawn fails without an empty cell and is not counted") {
  Config cfg = pp_config("12/34");
  cfg.set("max_agents", 5);  // below-cap spawn, but the board is full
  PredatorPreyEnv env(cfg);
  env.reset(1);
  StepResult res = env.step(acts({PredatorPreyEnv::kSpawn,
                                  PredatorPreyEnv::kNone,
                                  PredatorPreyEnv::kNone,
                                  PredatorPreyEnv::kNone},
                                 5, env.dummy_action()));
  CHECK(res.info.spawns == 0);
  CHECK(env.population().alive_count() == 4);
  CHECK(env.population().children_count(1) == 0);
  CHECK(res.rewards[0] == doctest::Approx(-0.01).epsilon(1e-12));
}

TEST_CASE("spawning at the episode ceiling is a no-op") {
  PredatorPreyEnv env(pp_config("12.../...../...../...../....x"));
  env.set_episode_ceiling(2);
  env.reset(1);
  StepResult res = env.step(acts({PredatorPreyEnv::kSpawn,
                                  PredatorPreyEnv::kSpawn},
                                 4, env.dummy_action()));
  CHECK(res.info.spawns == 0);
  CHECK(env.population().alive_count() == 2);
  CHECK(res.rewards[0] == doctest::Approx(-0.01).epsilon(1e-12));
}

TEST_CASE("raw prey move distribution matches the stated probabilities") {
  Rng rng(99);
  const int n = 100000;
  int counts[5] = {0, 0, 0, 0, 0};
  for (int i = 0; i < n; ++i) ++counts[PredatorPreyEnv::sample_prey_move(rng)];
  double stay = static_cast<double>(counts[0]) / n;
  CHECK(stay > 0.29);
  CHECK(stay < 0.31);
  for (int d = 1; d <= 4; ++d) {
    double f = static_cast<double>(counts[d]) / n;
    CHECK(f > 0.165);
    CHECK(f < 0.185);
  }
}

TEST_CASE("a prey never moves into capture range") {
  // Prey two cells east of a predator: the only forbidden destination is
  // the cell between them. Run many steps and make sure the prey never
  // lands orthogonally adjacent to the stationary predator.
  Config cfg = pp_config("......./......./...1.x./......./......./......./"
                         ".......");
  cfg.set("horizon", 100000);
  PredatorPreyEnv env(cfg);
  env.reset(5);
  for (int t = 0; t < 3000; ++t) {
    env.step(acts({PredatorPreyEnv::kNone}, 4, env.dummy_action()));
    auto pos = env.prey_positions();
    REQUIRE(pos.size() == 1);
    int dist = std::abs(pos[0].first - 2) + std::abs(pos[0].second - 3);
    CHECK(dist != 1);
  }
}

TEST_CASE("all-idle episode runs to the horizon and pays step costs only") {
  // A single predator cannot capture; no prey starts adjacent to it.
  PredatorPreyEnv env(pp_config("1..../...../...../...../....x"));
  env.reset(11);
  double total = 0.0;
  int steps = 0;
  for (;; ++steps) {
    StepResult res =
        env.step(acts({PredatorPreyEnv::kNone}, 4, env.dummy_action()));
    total += res.rewards[0];
    if (res.done) break;
  }
  CHECK(steps + 1 == 100);
  CHECK(total == doctest::Approx(-100 * 0.01).epsilon(1e-9));
}

TEST_CASE("window planes: empty neighborhood is all zero, self excluded") {
  // Lone predator far from the prey on a big board.
  std::string layout;
  for (int r = 0; r < 13; ++r) {
    std::string row(13, '.');
    if (r == 0) row[0] = '1';
    if (r == 12) row[12] = 'x';
    layout += (r ? "/" : "") + row;
  }
  Config cfg;
  cfg.set("layout", layout);
  cfg.set("max_agents", 2);
  PredatorPreyEnv env(cfg);
  std::vector<double> obs = env.reset(1);
  const int cells = 11 * 11;
  // Predator and prey planes empty (prey is 24 Manhattan away).
  for (int i = 0; i < 2 * cells; ++i) CHECK(obs[i] == 0.0);
  // Corner agent: the out-of-bounds plane marks everything above/left.
  int oob = 0;
  for (int i = 2 * cells; i < 3 * cells; ++i) oob += obs[i] > 0.5 ? 1 : 0;
  CHECK(oob == cells - 6 * 6);
}

TEST_CASE("window planes mark nearby entities relative to the observer") {
  PredatorPreyEnv env(pp_config("...../.1x../...../..2../....."));
  std::vector<double> obs = env.reset(1);
  const int cells = 11 * 11, center = 5 * 11 + 5;
  const double* pred = obs.data();           // agent 1's window
  const double* prey = obs.data() + cells;
  CHECK(pred[center] == 0.0);                // self excluded
  CHECK(prey[center + 1] == 1.0);            // prey one cell east
  CHECK(pred[center + 2 * 11 + 1] == 1.0);   // agent 2 two south, one east
}

TEST_CASE("observation tail: ids, previous actions, population scalars") {
  PredatorPreyEnv env(pp_config("12.../...../...../...../....x"));
  std::vector<double> obs = env.reset(1);
  const int len = env.observation_size();
  const int tail0 = 11 * 11 * 3;
  // Agent 2's row: position (0,1)/5, id 2/4.
  const double* o2 = obs.data() + len;
  CHECK(o2[tail0 + 0] == 0.0);
  CHECK(o2[tail0 + 1] == doctest::Approx(0.2));
  CHECK(o2[tail0 + 2] == doctest::Approx(0.5));
  // At reset every slot's previous action is the dummy (index 6).
  for (int j = 0; j < 4; ++j) {
    for (int a = 0; a < 7; ++a)
      CHECK(o2[tail0 + 3 + j * 7 + a] == (a == 6 ? 1.0 : 0.0));
  }

  StepResult res = env.step(acts({PredatorPreyEnv::kSouth,
                                  PredatorPreyEnv::kSpawn},
                                 4, env.dummy_action()));
  REQUIRE(res.info.spawns == 1);
  o2 = res.obs.data() + len;
  CHECK(o2[tail0 + 3 + 0 * 7 + PredatorPreyEnv::kSouth] == 1.0);
  CHECK(o2[tail0 + 3 + 1 * 7 + PredatorPreyEnv::kSpawn] == 1.0);
  CHECK(o2[tail0 + 3 + 2 * 7 + 6] == 1.0);  // newborn slot held the dummy
  const int scalars = tail0 + 3 + 4 * 7;
  CHECK(o2[scalars + 0] == doctest::Approx(1.0 / 3));  // one child, max 3
  CHECK(o2[scalars + 1] == doctest::Approx(1.0));      // 1 of 1 prey alive
  CHECK(o2[scalars + 2] == doctest::Approx(3.0 / 4));  // 3 alive of 4
  CHECK(o2[scalars + 3] == doctest::Approx(1.0));      // ceiling 4 of 4
  // Dead slot 4 observes nothing.
  const double* o4 = res.obs.data() + 3 * len;
  for (int i = 0; i < len; ++i) CHECK(o4[i] == 0.0);
}

TEST_CASE("global state mirrors the board and population") {
  PredatorPreyEnv env(pp_config("12.../...../...../...../....x"));
  env.reset(1);
  std::vector<double> gs = env.global_state();
  REQUIRE(static_cast<int>(gs.size()) == env.global_state_size());
  CHECK(gs[0] == 1.0);                   // predator at (0,0)
  CHECK(gs[1] == 1.0);                   // predator at (0,1)
  CHECK(gs[25 + 24] == 1.0);             // prey plane, cell (4,4)
  CHECK(gs[50] == doctest::Approx(0.5)); // 2 alive of 4
}

TEST_CASE("fixed seed replays the identical episode") {
  Config cfg;
  cfg.set("grid_size", 7);
  cfg.set("n_prey", 4);
  cfg.set("max_agents", 4);
  cfg.set("initial_agents", 2);
  PredatorPreyEnv a(cfg), b(cfg);
  Rng pol_a(3), pol_b(3);
  auto run = [](PredatorPreyEnv& env, Rng& pol) {
    std::vector<std::string> digests;
    env.reset(42);
    for (int t = 0; t < 60; ++t) {
      JointAction act(env.max_agents(), env.dummy_action());
      for (AgentId id : env.population().alive_ids())
        act[id - 1] = pol.uniform_int(0, env.num_actions() - 1);
      StepResult res = env.step(act);
      digests.push_back(env.state_digest());
      if (res.done) break;
    }
    return digests;
  };
  CHECK(run(a, pol_a) == run(b, pol_b));
}

TEST_CASE("random episodes keep single occupancy and respect the ceiling") {
  Config cfg;
  cfg.set("grid_size", 6);
  cfg.set("n_prey", 5);
  cfg.set("max_agents", 5);
  cfg.set("initial_agents", 1);
  PredatorPreyEnv env(cfg);
  Rng pol(17);
  for (int ep = 0; ep < 30; ++ep) {
    env.reset(1000 + ep);
    for (int t = 0; t < 100; ++t) {
      JointAction act(env.max_agents(), env.dummy_action());
      for (AgentId id : env.population().alive_ids())
        act[id - 1] = pol.uniform_int(0, env.num_actions() - 1);
      StepResult res = env.step(act);
      CHECK(env.population().alive_count() <= 5);
      // Count entities on the rendered board: every entity owns one cell.
      std::string board = env.render();
      int preds = 0, preys = 0;
      for (char ch : board) {
        if (ch >= '1' && ch <= '9') ++preds;
        if (ch == 'x') ++preys;
      }
      CHECK(preds == env.population().alive_count());
      CHECK(preys == env.preys_alive());
      if (res.done) break;
    }
  }
}
