#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "fluidrl/env/lbf.hpp"

using namespace fluidrl;

namespace {

Config lbf_config(const std::string& layout, const std::string& agent_levels,
                  int max_agents = 4) {
  Config cfg;
  cfg.set("layout", layout);
  cfg.set("agent_levels", agent_levels);
  cfg.set("max_agents", max_agents);
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

TEST_CASE("observation length follows the component formula") {
  for (int nf = 0; nf <= 6; ++nf)
    for (int na = 0; na <= 6; ++na)
      CHECK(LbfEnv::observation_length(nf, na) == 3 * nf + 6 * na + 2);

  // Constructed environments agree with the formula.
  Config cfg;
  cfg.set("food_levels", "2,3,4,5");
  cfg.set("agent_levels", "1,2");
  cfg.set("max_agents", 4);
  LbfEnv env(cfg);
  CHECK(env.observation_size() == 38);

  Config degenerate;
  degenerate.set("food_levels", "");
  degenerate.set("agent_levels", "1");
  degenerate.set("max_agents", 1);
  CHECK(LbfEnv(degenerate).observation_size() == 8);
}

TEST_CASE("joint load succeeds when adjacent loader levels cover the food") {
  // Level-2 food at (0,1); loaders of levels 1 and 2 adjacent to it.
  LbfEnv env(lbf_config("1b../.2../..../....", "1,2"));
  env.reset(1);
  StepResult res = env.step(
      acts({LbfEnv::kLoad, LbfEnv::kLoad}, 4, env.dummy_action()));
  CHECK(res.info.loads == 1);
  CHECK(env.foods_alive() == 0);
  CHECK(res.done);
  // Shares of 2 weighted by level, minus the step cost 0.025.
  CHECK(res.rewards[0] == doctest::Approx(2.0 / 3 - 0.025).epsilon(1e-12));
  CHECK(res.rewards[1] == doctest::Approx(4.0 / 3 - 0.025).epsilon(1e-12));
  // The distributed food reward sums to the food's level.
  CHECK(res.rewards[0] + res.rewards[1] ==
        doctest::Approx(2.0 - 0.05).epsilon(1e-12));
}

TEST_CASE("insufficient loader levels leave the food in place") {
  // Level-5 food flanked by levels 1 and 2: 3 < 5.
  LbfEnv env(lbf_config("1e2./..../..../....", "1,2"));
  env.reset(1);
  StepResult res = env.step(
      acts({LbfEnv::kLoad, LbfEnv::kLoad}, 4, env.dummy_action()));
  CHECK(res.info.loads == 0);
  CHECK(env.foods_alive() == 1);
  CHECK(res.rewards[0] == doctest::Approx(-0.025).epsilon(1e-12));
}

TEST_CASE("an adjacent agent that did not load does not participate") {
  // Level-2 food; the level-2 agent loads, the level-1 one idles.
  LbfEnv env(lbf_config("1b../.2../..../....", "1,2"));
  env.reset(1);
  StepResult res =
      env.step(acts({LbfEnv::kNone, LbfEnv::kLoad}, 4, env.dummy_action()));
  CHECK(res.info.loads == 1);
  CHECK(res.rewards[0] == doctest::Approx(-0.025).epsilon(1e-12));
  CHECK(res.rewards[1] == doctest::Approx(2.0 - 0.025).epsilon(1e-12));
}

TEST_CASE("lone high-level collector takes the full share") {
  LbfEnv env(lbf_config("1b../..../..../....", "2"));
  env.reset(1);
  StepResult res = env.step(acts({LbfEnv::kLoad}, 4, env.dummy_action()));
  CHECK(res.rewards[0] == doctest::Approx(2.0 - 0.025).epsilon(1e-12));
}

TEST_CASE("spawn cost is split per capita over the pre-step alive set") {
  // Foods far away and uncollectable; agent 1 spawns.
  LbfEnv env(lbf_config("1.../.2../..../...i", "1,2"));
  env.reset(7);
  StepResult res =
      env.step(acts({LbfEnv::kSpawn, LbfEnv::kNone}, 4, env.dummy_action()));
  CHECK(res.info.spawns == 1);
  CHECK(res.rewards[0] == doctest::Approx(-0.525).epsilon(1e-12));
  CHECK(res.rewards[1] == doctest::Approx(-0.525).epsilon(1e-12));
  CHECK(res.rewards[2] == 0.0);  // newborn
}

TEST_CASE("a child inherits its parent's level") {
  LbfEnv env(lbf_config("1.../.2../..../...i", "1,2"));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    env.reset(seed);
    env.step(acts({LbfEnv::kNone, LbfEnv::kSpawn}, 4, env.dummy_action()));
    REQUIRE(env.population().is_alive(3));
    CHECK(env.agent_level(3) == 2);
    CHECK(env.population().children_count(2) == 1);
    CHECK(env.spawned_agent_levels() == std::vector<int>{2});
  }
}

TEST_CASE("moves into occupied cells fail; lower id wins contested cells") {
  LbfEnv env(lbf_config("1.2./..../..../...i", "1,1"));
  env.reset(1);
  env.step(acts({LbfEnv::kEast, LbfEnv::kWest}, 4, env.dummy_action()));
  CHECK(env.render().substr(0, 4) == ".12.");

  // Food cells block movement too.
  LbfEnv fenv(lbf_config("1a../..../..../...i", "1"));
  fenv.reset(1);
  fenv.step(acts({LbfEnv::kEast}, 4, fenv.dummy_action()));
  CHECK(fenv.render().substr(0, 4) == "1a..");
}

TEST_CASE("episode ends at the horizon when food survives") {
  Config cfg = lbf_config("1.../..../..../...i", "1");
  cfg.set("horizon", 100);
  LbfEnv env(cfg);
  env.reset(3);
  int steps = 0;
  for (;; ++steps) {
    StepResult res =
        env.step(acts({LbfEnv::kNone}, 4, env.dummy_action()));
    if (res.done) break;
  }
  CHECK(steps + 1 == 100);
  CHECK(env.foods_alive() == 1);
}

TEST_CASE("observation encodes foods, agents, and population scalars") {
  LbfEnv env(lbf_config("1b../.2../..../....", "1,2"));
  std::vector<double> obs = env.reset(1);
  int len = env.observation_size();
  REQUIRE(len == 3 * 1 + 6 * 4 + 2);
  const double* o1 = obs.data();
  // Food (0,1) level 2 of max level 2.
  CHECK(o1[0] == 0.0);
  CHECK(o1[1] == doctest::Approx(0.25));
  CHECK(o1[2] == doctest::Approx(1.0));
  // Agent 1 at (0,0), level 1, alive, no children, prev action dummy.
  CHECK(o1[3] == 0.0);
  CHECK(o1[4] == 0.0);
  CHECK(o1[5] == doctest::Approx(0.5));
  CHECK(o1[6] == 1.0);
  CHECK(o1[7] == 0.0);
  CHECK(o1[8] == doctest::Approx(1.0));  // dummy = 7 of 7
  // Dead slots 3 and 4 are zeroed.
  for (int i = 3 + 12; i < 3 + 24; ++i) CHECK(o1[i] == 0.0);
  // Ceiling 4 of 4, own id 1 of 4.
  CHECK(o1[len - 2] == doctest::Approx(1.0));
  CHECK(o1[len - 1] == doctest::Approx(0.25));
  // Agent 2's row differs only in the trailing id.
  const double* o2 = obs.data() + len;
  CHECK(o2[len - 1] == doctest::Approx(0.5));

  // After collection the food's triple zeroes out.
  StepResult res = env.step(
      acts({LbfEnv::kLoad, LbfEnv::kLoad}, 4, env.dummy_action()));
  const double* o1b = res.obs.data();
  CHECK(o1b[0] == 0.0);
  CHECK(o1b[1] == 0.0);
  CHECK(o1b[2] == 0.0);
  CHECK(o1b[8] == doctest::Approx(5.0 / 7));  // prev action: load
}

TEST_CASE("curriculum roster override controls count and levels") {
  Config cfg;
  cfg.set("agent_levels", "1,2");
  cfg.set("max_agents", 4);
  cfg.set("grid_size", 6);
  LbfEnv env(cfg);
  env.set_initial_levels({2, 2, 1});
  env.set_episode_ceiling(3);
  env.reset(5);
  CHECK(env.population().alive_count() == 3);
  CHECK(env.initial_agent_count() == 3);
  CHECK(env.agent_level(1) == 2);
  CHECK(env.agent_level(2) == 2);
  CHECK(env.agent_level(3) == 1);
  // At the sampled ceiling, spawning is a no-op.
  StepResult res = env.step(acts({LbfEnv::kSpawn, LbfEnv::kSpawn,
                                  LbfEnv::kSpawn},
                                 4, env.dummy_action()));
  CHECK(res.info.spawns == 0);
  CHECK(env.population().alive_count() == 3);
}

TEST_CASE("fixed seed replays the identical episode") {
  Config cfg;
  cfg.set("agent_levels", "1,2");
  cfg.set("max_agents", 4);
  cfg.set("grid_size", 6);
  LbfEnv a(cfg), b(cfg);
  auto run = [](LbfEnv& env) {
    Rng pol(13);
    std::vector<std::string> digests;
    env.reset(21);
    for (int t = 0; t < 80; ++t) {
      JointAction act(env.max_agents(), env.dummy_action());
      for (AgentId id : env.population().alive_ids())
        act[id - 1] = pol.uniform_int(0, env.num_actions() - 1);
      StepResult res = env.step(act);
      digests.push_back(env.state_digest());
      if (res.done) break;
    }
    return digests;
  };
  CHECK(run(a) == run(b));
}

TEST_CASE("random rollouts: occupancy, ceiling, and level inheritance hold") {
  Config cfg;
  cfg.set("agent_levels", "1,3");
  cfg.set("food_levels", "2,4");
  cfg.set("max_agents", 6);
  cfg.set("grid_size", 5);
  LbfEnv env(cfg);
  Rng pol(31);
  for (int ep = 0; ep < 30; ++ep) {
    env.reset(500 + ep);
    for (int t = 0; t < 100; ++t) {
      JointAction act(env.max_agents(), env.dummy_action());
      for (AgentId id : env.population().alive_ids())
        act[id - 1] = pol.uniform_int(0, env.num_actions() - 1);
      StepResult res = env.step(act);
      CHECK(env.population().alive_count() <= 6);
      std::string board = env.render();
      int agents = 0, foods = 0;
      for (char ch : board) {
        if (ch >= '1' && ch <= '9') ++agents;
        if (ch >= 'a' && ch <= 'i') ++foods;
      }
      CHECK(agents == env.population().alive_count());
      CHECK(foods == env.foods_alive());
      // Inherited levels stay within the initial roster's set.
      for (AgentId id : env.population().alive_ids()) {
        int l = env.agent_level(id);
        CHECK((l == 1 || l == 3));
      }
      if (res.done) break;
    }
  }
}
