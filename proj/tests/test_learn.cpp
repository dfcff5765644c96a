#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fluidrl/common/config.hpp"
#include "fluidrl/common/rng.hpp"
#include "fluidrl/env/lbf.hpp"
#include "fluidrl/env/predator_prey.hpp"
#include "fluidrl/env/registry.hpp"
#include "fluidrl/learn/arch.hpp"
#include "fluidrl/learn/curriculum.hpp"
#include "fluidrl/learn/explore.hpp"
#include "fluidrl/learn/gae.hpp"
#include "fluidrl/learn/ppo.hpp"
#include "fluidrl/learn/qlearner.hpp"
#include "fluidrl/learn/replay.hpp"
#include "fluidrl/learn/schedule.hpp"

using namespace fluidrl;

namespace {

bool same_tensors(const ParameterSet& a, const ParameterSet& b) {
  if (a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i) {
    if (a.name(i) != b.name(i)) return false;
    if (a.tensor(i).shape != b.tensor(i).shape) return false;
    if (a.tensor(i).data != b.tensor(i).data) return false;
  }
  return true;
}

NetworkSpec small_q_net(int obs, int actions) {
  NetworkSpec s;
  s.tail_dim = obs;
  s.trunk = {16};
  s.head = Head::kDuelingQ;
  s.actions = actions;
  return s;
}

ReplayItem random_item(Rng& rng, int A, int S, int nact,
                       std::vector<std::uint8_t> alive,
                       std::vector<std::uint8_t> alive_next, bool done) {
  ReplayItem it;
  it.obs.resize(static_cast<std::size_t>(A) * S);
  it.obs_next.resize(it.obs.size());
  it.actions.assign(A, nact - 1);
  it.rewards.assign(A, 0.0);
  it.alive = std::move(alive);
  it.alive_next = std::move(alive_next);
  it.done = done;
  for (int i = 0; i < A; ++i) {
    for (int j = 0; j < S; ++j) {
      it.obs[static_cast<std::size_t>(i) * S + j] =
          static_cast<float>(rng.normal());
      it.obs_next[static_cast<std::size_t>(i) * S + j] =
          static_cast<float>(rng.normal());
    }
    if (it.alive[i]) {
      it.actions[i] = rng.uniform_int(0, nact - 1);
      it.rewards[i] = rng.uniform(-1.0, 1.0);
    }
  }
  return it;
}

Config env_config(const std::string& name,
                  const std::vector<std::pair<std::string, std::string>>& kv) {
  Config cfg;
  cfg.set("env", name);
  for (const auto& [k, v] : kv) cfg.set(k, v);
  return cfg;
}

}  // namespace

TEST_CASE("epsilon greedy frequencies match the mixture") {
  const int nact = 7, spawn = 5;
  std::vector<double> q(nact, 0.0);

  SUBCASE("fully random branch") {
    Rng rng(123);
    std::vector<int> counts(nact, 0);
    const int n = 100000;
    for (int k = 0; k < n; ++k)
      ++counts[select_action_eps_greedy(q.data(), nact, spawn, 1.0, 0.1, rng)];
    // spawn probability 0.1, every other action (1 - 0.1) / 6 = 0.15;
    // three-sigma binomial bands
    CHECK(std::abs(counts[spawn] - 10000) <= 285);
    for (int a = 0; a < nact; ++a) {
      if (a == spawn) continue;
      CHECK(std::abs(counts[a] - 15000) <= 339);
    }
  }

  SUBCASE("greedy branch and tie break") {
    Rng rng(5);
    q[2] = 1.0;
    CHECK(select_action_eps_greedy(q.data(), nact, spawn, 0.0, 0.5, rng) == 2);
    std::fill(q.begin(), q.end(), 3.5);
    // equal values resolve to the lowest index
    CHECK(select_action_eps_greedy(q.data(), nact, spawn, 0.0, 0.5, rng) == 0);
  }

  SUBCASE("mixed eps") {
    Rng rng(77);
    q.assign(nact, 0.0);
    q[3] = 2.0;
    int hits = 0;
    const int n = 100000;
    for (int k = 0; k < n; ++k)
      if (select_action_eps_greedy(q.data(), nact, spawn, 0.4, 0.1, rng) == 3)
        ++hits;
    // P(argmax) = 0.6 + 0.4 * 0.15 = 0.66
    CHECK(std::abs(hits - 66000) <= 3 * std::sqrt(100000 * 0.66 * 0.34));
  }
}

TEST_CASE("schedules interpolate and clamp") {
  CHECK(linear_schedule(1e-3, 1e-4, 0.0) == doctest::Approx(1e-3));
  CHECK(linear_schedule(1e-3, 1e-4, 1.0) == doctest::Approx(1e-4));
  CHECK(linear_schedule(1e-3, 1e-4, 0.5) == doctest::Approx(5.5e-4));
  CHECK(linear_schedule(1e-3, 1e-4, 2.0) == doctest::Approx(1e-4));
  CHECK(spawn_eps_schedule(0, 1000, 0.1) == doctest::Approx(0.0));
  CHECK(spawn_eps_schedule(500, 1000, 0.1) == doctest::Approx(0.05));
  CHECK(spawn_eps_schedule(1000, 1000, 0.1) == doctest::Approx(0.1));
  CHECK(spawn_eps_schedule(3, 0, 0.1) == doctest::Approx(0.1));
}

TEST_CASE("replay ring keeps only the newest items") {
  ReplayBuffer buf(3);
  Rng rng(1);
  for (int k = 0; k < 5; ++k) {
    ReplayItem it;
    it.rewards = {static_cast<double>(k)};
    buf.push(std::move(it));
  }
  CHECK(buf.size() == 3);
  std::set<double> seen;
  for (int k = 0; k < 200; ++k) seen.insert(buf.sample(rng).rewards[0]);
  CHECK(seen == std::set<double>{2.0, 3.0, 4.0});
}

TEST_CASE("population sampling stays inside its bounds") {
  Rng rng(42);
  std::vector<int> ceiling_counts(6, 0);
  bool saw_initial_three = false;
  for (int k = 0; k < 20000; ++k) {
    PopulationSample s = sample_population(5, 3, 2, rng);
    REQUIRE(s.episode_ceiling >= 1);
    REQUIRE(s.episode_ceiling <= 5);
    REQUIRE(s.initial_agents >= 1);
    REQUIRE(s.initial_agents <= std::min(s.episode_ceiling, 3));
    REQUIRE(static_cast<int>(s.levels.size()) == s.initial_agents);
    for (int lv : s.levels) {
      REQUIRE(lv >= 1);
      REQUIRE(lv <= 2);
    }
    ++ceiling_counts[s.episode_ceiling];
    if (s.initial_agents == 3) saw_initial_three = true;
  }
  // ceiling uniform over 1..5: 4000 expected, three-sigma band 371
  for (int c = 1; c <= 5; ++c) CHECK(std::abs(ceiling_counts[c] - 4000) <= 371);
  CHECK(saw_initial_three);

  PopulationSample flat = sample_population(4, 4, 0, rng);
  CHECK(flat.levels.empty());
  CHECK_THROWS(sample_population(0, 3, 0, rng));
}

TEST_CASE("curriculum overrides reach the environment") {
  SUBCASE("headcount env") {
    auto env = make_env(env_config(
        "predator_prey",
        {{"grid_size", "7"}, {"max_agents", "5"}, {"initial_agents", "1"}}));
    PopulationSample s;
    s.episode_ceiling = 3;
    s.initial_agents = 2;
    apply_population_sample(*env, s);
    env->reset(99);
    CHECK(env->population().alive_count() == 2);
    CHECK(env->population().ceiling() == 3);
    // the override is consumed by one reset
    env->reset(100);
    CHECK(env->population().alive_count() == 1);
    CHECK(env->population().ceiling() == 5);
  }

  SUBCASE("leveled env") {
    auto env = make_env(env_config("lbf", {{"grid_size", "6"},
                                           {"food_levels", "2,3"},
                                           {"agent_levels", "1,2"},
                                           {"max_agents", "4"}}));
    auto* lbf = dynamic_cast<LbfEnv*>(env.get());
    REQUIRE(lbf != nullptr);
    PopulationSample s;
    s.episode_ceiling = 2;
    s.initial_agents = 2;
    s.levels = {2, 1};
    apply_population_sample(*env, s);
    env->reset(7);
    CHECK(lbf->initial_agent_count() == 2);
    CHECK(lbf->agent_level(1) == 2);
    CHECK(lbf->agent_level(2) == 1);
    CHECK(env->population().ceiling() == 2);
  }

  SUBCASE("levels rejected where they have no meaning") {
    auto env = make_env(env_config(
        "predator_prey", {{"grid_size", "7"}, {"max_agents", "4"}}));
    PopulationSample s;
    s.episode_ceiling = 2;
    s.initial_agents = 1;
    s.levels = {1};
    CHECK_THROWS(apply_population_sample(*env, s));
  }
}

TEST_CASE("vdn reduces to iql for a single agent bit for bit") {
  const int A = 1, S = 4, nact = 3;
  ValueLearnerConfig base;
  base.net = small_q_net(S, nact);
  base.share = true;
  base.n_agents = A;
  base.n_actions = nact;
  base.obs_size = S;
  base.spawn_action = 1;
  base.gamma = 0.95;
  base.batch_size = 8;
  base.min_replay = 8;
  base.replay_capacity = 64;
  base.target_period = 3;

  ValueLearnerConfig cfg_vdn = base;
  cfg_vdn.vdn = true;
  ValueLearnerConfig cfg_iql = base;
  cfg_iql.vdn = false;

  Rng init1(2024), init2(2024);
  ValueLearner vdn(cfg_vdn, init1);
  ValueLearner iql(cfg_iql, init2);
  REQUIRE(same_tensors(vdn.params(), iql.params()));

  Rng data(5);
  for (int k = 0; k < 32; ++k) {
    ReplayItem it = random_item(data, A, S, nact, {1}, {1}, k % 5 == 0);
    vdn.push(it);
    iql.push(std::move(it));
  }
  Rng r1(9), r2(9);
  for (int k = 0; k < 12; ++k) {
    UpdateStats a = vdn.update(r1, k / 12.0);
    UpdateStats b = iql.update(r2, k / 12.0);
    CHECK(a.loss == b.loss);
    CHECK(a.grad_norm == b.grad_norm);
  }
  CHECK(same_tensors(vdn.params(), iql.params()));
  CHECK(same_tensors(vdn.target_params(), iql.target_params()));
}

TEST_CASE("dead slots cannot influence the update") {
  const int A = 3, S = 5, nact = 4;
  for (bool vdn : {true, false}) {
    CAPTURE(vdn);
    ValueLearnerConfig cfg;
    cfg.net = small_q_net(S, nact);
    cfg.vdn = vdn;
    cfg.n_agents = A;
    cfg.n_actions = nact;
    cfg.obs_size = S;
    cfg.spawn_action = 2;
    cfg.batch_size = 8;
    cfg.min_replay = 8;
    cfg.replay_capacity = 64;

    Rng i1(31), i2(31);
    ValueLearner clean(cfg, i1);
    ValueLearner fuzzed(cfg, i2);

    Rng data(77), noise(13);
    for (int k = 0; k < 24; ++k) {
      std::vector<std::uint8_t> alive = {1, static_cast<std::uint8_t>(k % 2), 0};
      std::vector<std::uint8_t> alive_next = alive;
      if (k % 3 == 0) alive_next[2] = 1;  // mid-step spawn
      ReplayItem it = random_item(data, A, S, nact, alive, alive_next, k % 7 == 0);
      ReplayItem mut = it;
      // scribble over everything a dead slot owns
      for (int i = 0; i < A; ++i) {
        if (!mut.alive[i]) {
          for (int j = 0; j < S; ++j)
            mut.obs[static_cast<std::size_t>(i) * S + j] =
                static_cast<float>(noise.normal() * 100.0);
          mut.actions[i] = noise.uniform_int(0, nact - 1);
        }
        if (!mut.alive_next[i])
          for (int j = 0; j < S; ++j)
            mut.obs_next[static_cast<std::size_t>(i) * S + j] =
                static_cast<float>(noise.normal() * 100.0);
      }
      clean.push(std::move(it));
      fuzzed.push(std::move(mut));
    }
    Rng r1(3), r2(3);
    for (int k = 0; k < 10; ++k) {
      UpdateStats a = clean.update(r1, 0.0);
      UpdateStats b = fuzzed.update(r2, 0.0);
      CHECK(a.loss == b.loss);
    }
    CHECK(same_tensors(clean.params(), fuzzed.params()));
  }
}

TEST_CASE("target net refreshes only at the sync period") {
  const int A = 2, S = 3, nact = 3;
  ValueLearnerConfig cfg;
  cfg.net = small_q_net(S, nact);
  cfg.vdn = true;
  cfg.n_agents = A;
  cfg.n_actions = nact;
  cfg.obs_size = S;
  cfg.spawn_action = 1;
  cfg.batch_size = 4;
  cfg.min_replay = 4;
  cfg.replay_capacity = 32;
  cfg.target_period = 4;

  Rng init(8);
  ValueLearner learner(cfg, init);
  Rng data(4);
  for (int k = 0; k < 16; ++k)
    learner.push(random_item(data, A, S, nact, {1, 1}, {1, 1}, false));

  ParameterSet frozen = learner.target_params();
  Rng upd(6);
  for (int k = 1; k <= 8; ++k) {
    learner.update(upd, 0.0);
    if (k % cfg.target_period == 0) {
      CHECK(same_tensors(learner.target_params(), learner.params()));
      frozen = learner.target_params();
    } else {
      CHECK(same_tensors(learner.target_params(), frozen));
      CHECK_FALSE(same_tensors(learner.target_params(), learner.params()));
    }
  }
}

TEST_CASE("gae matches the direct discounted sum") {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int T = 12;
    std::vector<double> r(T), v(T + 1);
    std::vector<std::uint8_t> d(T, 0);
    for (int t = 0; t < T; ++t) {
      r[t] = rng.uniform(-2.0, 2.0);
      v[t] = rng.uniform(-1.0, 1.0);
      if (rng.uniform() < 0.2) d[t] = 1;
    }
    v[T] = rng.uniform(-1.0, 1.0);
    const double gamma = rng.uniform(0.8, 0.999);
    const double lam = rng.uniform(0.7, 1.0);

    std::vector<double> got = gae_advantages(r, v, d, gamma, lam);
    for (int t = 0; t < T; ++t) {
      double acc = 0.0, coef = 1.0;
      for (int k = t; k < T; ++k) {
        const double cont = d[k] ? 0.0 : 1.0;
        acc += coef * (r[k] + gamma * cont * v[k + 1] - v[k]);
        if (d[k]) break;
        coef *= gamma * lam;
      }
      CHECK(got[t] == doctest::Approx(acc).epsilon(1e-12));
    }
  }
  CHECK_THROWS(gae_advantages({1.0}, {1.0}, {0}, 0.9, 0.9));
}

TEST_CASE("q learner fits a synthetic bandit") {
  const int A = 2, S = 3, nact = 4;
  ValueLearnerConfig cfg;
  cfg.net = small_q_net(S, nact);
  cfg.vdn = false;
  cfg.n_agents = A;
  cfg.n_actions = nact;
  cfg.obs_size = S;
  cfg.spawn_action = 2;
  cfg.lr_init = 5e-3;
  cfg.lr_min = 5e-3;
  cfg.batch_size = 16;
  cfg.min_replay = 16;
  cfg.replay_capacity = 256;
  cfg.target_period = 10;

  Rng init(55);
  ValueLearner learner(cfg, init);
  Rng data(66);
  for (int k = 0; k < 128; ++k) {
    ReplayItem it;
    it.obs.assign(static_cast<std::size_t>(A) * S, 0.5f);
    it.obs_next = it.obs;
    it.actions = {data.uniform_int(0, nact - 1), data.uniform_int(0, nact - 1)};
    it.rewards = {it.actions[0] == 1 ? 1.0 : 0.0,
                  it.actions[1] == 1 ? 1.0 : 0.0};
    it.alive = {1, 1};
    it.alive_next = {1, 1};
    it.done = true;
    learner.push(std::move(it));
  }
  Rng upd(77);
  double first_loss = 0.0, last_loss = 0.0;
  for (int k = 0; k < 300; ++k) {
    UpdateStats s = learner.update(upd, 0.0);
    if (k == 0) first_loss = s.loss;
    last_loss = s.loss;
  }
  CHECK(last_loss < first_loss * 0.1);

  std::vector<double> obs(static_cast<std::size_t>(A) * S, 0.5);
  std::vector<std::uint8_t> alive = {1, 0};
  std::vector<int> actions(A, -1);
  Rng act_rng(1);
  learner.select_actions(1, obs.data(), alive.data(), 0.0, 0.0, act_rng,
                         actions.data());
  CHECK(actions[0] == 1);
  CHECK(actions[1] == nact - 1);  // dead slot holds the dummy action
}

TEST_CASE("no sharing keeps per slot nets independent") {
  const int A = 2, S = 3, nact = 3;
  ValueLearnerConfig cfg;
  cfg.net = small_q_net(S, nact);
  cfg.vdn = true;
  cfg.share = false;
  cfg.n_agents = A;
  cfg.n_actions = nact;
  cfg.obs_size = S;
  cfg.spawn_action = 1;
  cfg.batch_size = 8;
  cfg.min_replay = 8;
  cfg.replay_capacity = 64;

  Rng init(12);
  ValueLearner learner(cfg, init);
  CHECK(learner.params().has("a1.trunk1.w"));
  CHECK(learner.params().has("a2.trunk1.w"));

  // only slot 1 alive: slot 2 grads are zero, its tensors move only through
  // optimizer momentum, which is zero before any slot-2 gradient
  Rng data(3);
  for (int k = 0; k < 16; ++k)
    learner.push(random_item(data, A, S, nact, {1, 0}, {1, 0}, false));
  ParameterSet before = learner.params();
  Rng upd(4);
  learner.update(upd, 0.0);
  CHECK(learner.params().get("a2.trunk1.w").data ==
        before.get("a2.trunk1.w").data);
  CHECK(learner.params().get("a1.trunk1.w").data !=
        before.get("a1.trunk1.w").data);
}

TEST_CASE("value learner checkpoints round trip") {
  const int A = 2, S = 4, nact = 5;
  ValueLearnerConfig cfg;
  cfg.net = small_q_net(S, nact);
  cfg.vdn = true;
  cfg.n_agents = A;
  cfg.n_actions = nact;
  cfg.obs_size = S;
  cfg.spawn_action = 3;
  cfg.gamma = 0.9;
  cfg.batch_size = 4;
  cfg.min_replay = 4;
  cfg.replay_capacity = 16;

  Rng init(21);
  ValueLearner learner(cfg, init);
  const std::string path = "ckpt_value_roundtrip.bin";
  learner.save(path, {{"note", "roundtrip"}});
  ValueLearner loaded = ValueLearner::load(path);
  std::remove(path.c_str());

  CHECK(same_tensors(learner.params(), loaded.params()));
  CHECK(loaded.config().vdn);
  CHECK(loaded.config().n_agents == A);
  CHECK(loaded.config().spawn_action == 3);
  CHECK(loaded.config().gamma == doctest::Approx(0.9));

  Rng a(2), b(2);
  std::vector<double> obs(static_cast<std::size_t>(A) * S, 0.25);
  std::vector<std::uint8_t> alive = {1, 1};
  std::vector<int> act1(A), act2(A);
  learner.select_actions(1, obs.data(), alive.data(), 0.3, 0.1, a, act1.data());
  loaded.select_actions(1, obs.data(), alive.data(), 0.3, 0.1, b, act2.data());
  CHECK(act1 == act2);
}

TEST_CASE("uniform policy reports exact entropy and masks dead rows") {
  const int A = 2, S = 3, nact = 4, E = 2;
  PolicyLearnerConfig cfg;
  cfg.actor.tail_dim = S;
  cfg.actor.trunk = {8};
  cfg.actor.head = Head::kPolicyValue;
  cfg.actor.actions = nact;
  cfg.n_agents = A;
  cfg.n_actions = nact;
  cfg.obs_size = S;
  cfg.spawn_action = 2;
  cfg.rollout_steps = 4;
  cfg.epochs = 1;
  cfg.minibatches = 1;
  cfg.ent_coef = 0.0;

  Rng init(14);
  PolicyLearner learner(cfg, init);
  // zero the policy head: logits vanish and the policy is exactly uniform
  for (double& e : learner.mutable_params().get("pi.actor.w").data) e = 0.0;
  for (double& e : learner.mutable_params().get("pi.actor.b").data) e = 0.0;

  Rng rng(3);
  std::vector<double> obs(static_cast<std::size_t>(E) * A * S);
  std::vector<std::uint8_t> alive = {1, 0, 1, 1};
  std::vector<int> actions(static_cast<std::size_t>(E) * A);
  std::vector<double> rewards(static_cast<std::size_t>(E) * A, 0.0);
  std::vector<std::uint8_t> done(E, 0);
  for (int t = 0; t < cfg.rollout_steps; ++t) {
    for (double& x : obs) x = rng.normal();
    learner.act(E, obs.data(), alive.data(), nullptr, rng, actions.data());
    CHECK(actions[1] == nact - 1);  // dead slot
    for (std::size_t k = 0; k < rewards.size(); ++k)
      rewards[k] = alive[k] ? rng.uniform(-1.0, 1.0) : 0.0;
    learner.record(E, rewards.data(), done.data());
  }
  CHECK(learner.rollout_full());
  const RolloutBatch& buf = learner.rollout();
  CHECK(buf.T == cfg.rollout_steps);
  CHECK(buf.E == E);
  // dead rows carry zero log-probabilities and values
  CHECK(buf.logp[1] == 0.0f);
  CHECK(buf.values[1] == 0.0f);

  PolicyUpdateStats stats =
      learner.update(E, obs.data(), alive.data(), nullptr, rng, 0.0);
  CHECK(stats.entropy == doctest::Approx(std::log(double(nact))).epsilon(1e-9));
  CHECK(stats.skipped_minibatches == 0);
  CHECK(learner.rollout().T == 0);
}

TEST_CASE("non finite ratios skip the minibatch") {
  const int A = 1, S = 2, nact = 3, E = 2;
  PolicyLearnerConfig cfg;
  cfg.actor.tail_dim = S;
  cfg.actor.trunk = {4};
  cfg.actor.head = Head::kPolicyValue;
  cfg.actor.actions = nact;
  cfg.n_agents = A;
  cfg.n_actions = nact;
  cfg.obs_size = S;
  cfg.spawn_action = 1;
  cfg.rollout_steps = 2;
  cfg.epochs = 2;
  cfg.minibatches = 1;

  Rng init(19);
  PolicyLearner learner(cfg, init);
  ParameterSet before = learner.params();

  Rng rng(8);
  std::vector<double> obs(static_cast<std::size_t>(E) * A * S,
                          std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> alive(static_cast<std::size_t>(E) * A, 1);
  std::vector<int> actions(static_cast<std::size_t>(E) * A);
  std::vector<double> rewards(static_cast<std::size_t>(E) * A, 0.0);
  std::vector<std::uint8_t> done(E, 1);
  for (int t = 0; t < cfg.rollout_steps; ++t) {
    learner.act(E, obs.data(), alive.data(), nullptr, rng, actions.data());
    learner.record(E, rewards.data(), done.data());
  }
  PolicyUpdateStats stats =
      learner.update(E, obs.data(), alive.data(), nullptr, rng, 0.0);
  CHECK(stats.skipped_minibatches == cfg.epochs);
  CHECK(same_tensors(learner.params(), before));
}

TEST_CASE("ppo learns a synthetic bandit") {
  const int A = 1, S = 3, nact = 3, E = 4;
  PolicyLearnerConfig cfg;
  cfg.actor.tail_dim = S;
  cfg.actor.trunk = {16};
  cfg.actor.head = Head::kPolicyValue;
  cfg.actor.actions = nact;
  cfg.n_agents = A;
  cfg.n_actions = nact;
  cfg.obs_size = S;
  cfg.spawn_action = 2;
  cfg.rollout_steps = 8;
  cfg.epochs = 4;
  cfg.minibatches = 2;
  cfg.lr_init = 3e-3;
  cfg.lr_min = 3e-3;
  cfg.ent_coef = 0.01;
  cfg.gamma = 0.9;
  cfg.lam = 0.95;

  Rng init(101);
  PolicyLearner learner(cfg, init);
  Rng rng(7);
  std::vector<double> obs(static_cast<std::size_t>(E) * A * S, 1.0);
  std::vector<std::uint8_t> alive(static_cast<std::size_t>(E) * A, 1);
  std::vector<int> actions(static_cast<std::size_t>(E) * A);
  std::vector<double> rewards(static_cast<std::size_t>(E) * A);
  std::vector<std::uint8_t> done(E, 1);

  for (int round = 0; round < 60; ++round) {
    for (int t = 0; t < cfg.rollout_steps; ++t) {
      learner.act(E, obs.data(), alive.data(), nullptr, rng, actions.data());
      for (int e = 0; e < E; ++e)
        rewards[e] = actions[e] == 1 ? 1.0 : 0.0;
      learner.record(E, rewards.data(), done.data());
    }
    learner.update(E, obs.data(), alive.data(), nullptr, rng, 0.0);
  }
  learner.act_greedy(E, obs.data(), alive.data(), actions.data());
  for (int e = 0; e < E; ++e) CHECK(actions[e] == 1);
}

TEST_CASE("centralized critic consumes the packed rows") {
  const int A = 2, S = 3, nact = 3, E = 2, C = 6;
  PolicyLearnerConfig cfg;
  cfg.actor.tail_dim = S;
  cfg.actor.trunk = {8};
  cfg.actor.head = Head::kPolicy;
  cfg.actor.actions = nact;
  cfg.critic.tail_dim = C;
  cfg.critic.trunk = {8};
  cfg.critic.head = Head::kValue;
  cfg.centralized = true;
  cfg.n_agents = A;
  cfg.n_actions = nact;
  cfg.obs_size = S;
  cfg.spawn_action = 1;
  cfg.critic_input = C;
  cfg.rollout_steps = 3;
  cfg.epochs = 2;
  cfg.minibatches = 2;

  Rng init(33);
  PolicyLearner learner(cfg, init);
  CHECK(learner.params().has("pi.actor.w"));
  CHECK(learner.params().has("vf.value.w"));
  CHECK_FALSE(learner.params().has("pi.critic.w"));

  Rng rng(9);
  std::vector<double> obs(static_cast<std::size_t>(E) * A * S);
  std::vector<double> critic_in(static_cast<std::size_t>(E) * C);
  std::vector<std::uint8_t> alive = {1, 1, 1, 0};
  std::vector<int> actions(static_cast<std::size_t>(E) * A);
  std::vector<double> rewards(static_cast<std::size_t>(E) * A, 0.1);
  std::vector<std::uint8_t> done(E, 0);
  for (int t = 0; t < cfg.rollout_steps; ++t) {
    for (double& x : obs) x = rng.normal();
    for (double& x : critic_in) x = rng.normal();
    learner.act(E, obs.data(), alive.data(), critic_in.data(), rng,
                actions.data());
    // the shared value estimate is broadcast to every alive slot
    const RolloutBatch& buf = learner.rollout();
    const std::size_t base = static_cast<std::size_t>(buf.T) * E * A;
    CHECK(buf.values[base + 0] == buf.values[base + 1]);
    CHECK(buf.values[base + 3] == 0.0f);
    learner.record(E, rewards.data(), done.data());
  }
  PolicyUpdateStats stats = learner.update(E, obs.data(), alive.data(),
                                           critic_in.data(), rng, 0.0);
  CHECK(stats.skipped_minibatches == 0);
  CHECK(std::isfinite(stats.loss));

  // acting without the critic rows must fail while training
  CHECK_THROWS(learner.act(E, obs.data(), alive.data(), nullptr, rng,
                           actions.data()));
}

TEST_CASE("policy learner checkpoints round trip") {
  const int A = 1, S = 3, nact = 4;
  PolicyLearnerConfig cfg;
  cfg.actor.tail_dim = S;
  cfg.actor.trunk = {8};
  cfg.actor.head = Head::kPolicyValue;
  cfg.actor.actions = nact;
  cfg.n_agents = A;
  cfg.n_actions = nact;
  cfg.obs_size = S;
  cfg.spawn_action = 2;

  Rng init(44);
  PolicyLearner learner(cfg, init);
  const std::string path = "ckpt_policy_roundtrip.bin";
  learner.save(path);
  PolicyLearner loaded = PolicyLearner::load(path);
  std::remove(path.c_str());

  CHECK(same_tensors(learner.params(), loaded.params()));
  CHECK_FALSE(loaded.config().centralized);

  std::vector<double> obs = {0.3, -0.2, 0.9};
  std::vector<std::uint8_t> alive = {1};
  int a1 = -1, a2 = -2;
  learner.act_greedy(1, obs.data(), alive.data(), &a1);
  loaded.act_greedy(1, obs.data(), alive.data(), &a2);
  CHECK(a1 == a2);
}

TEST_CASE("network presets match the environment dimensions") {
  auto pp = make_env(env_config(
      "predator_prey", {{"grid_size", "9"}, {"max_agents", "6"}}));
  auto lbf = make_env(env_config("lbf", {{"grid_size", "8"},
                                         {"food_levels", "2,3,4,5"},
                                         {"agent_levels", "1,2"},
                                         {"max_agents", "4"}}));
  auto pb = make_env(env_config("puddle_bridge", {{"max_agents", "4"}}));

  for (Algo algo : {Algo::kIql, Algo::kVdn, Algo::kPpo, Algo::kMappo,
                    Algo::kMappoState}) {
    CAPTURE(algo_name(algo));
    NetworkSpec s = agent_net_spec(*pp, algo);
    CHECK(s.input_size() == pp->observation_size());
    CHECK(s.actions == pp->num_actions());
    if (is_value_based(algo)) {
      CHECK(s.head == Head::kDuelingQ);
      CHECK(s.conv_channels == std::vector<int>{8, 16});
    }
  }
  CHECK(agent_net_spec(*pp, Algo::kPpo).head == Head::kPolicyValue);
  CHECK(agent_net_spec(*pp, Algo::kMappo).head == Head::kPolicy);

  for (Algo algo : {Algo::kIql, Algo::kVdn, Algo::kPpo, Algo::kMappo}) {
    NetworkSpec s = agent_net_spec(*lbf, algo);
    CHECK(s.input_size() == lbf->observation_size());
    CHECK_FALSE(s.has_conv());
  }
  CHECK(agent_net_spec(*lbf, Algo::kIql).layernorm);
  CHECK(agent_net_spec(*lbf, Algo::kIql).dropout == doctest::Approx(0.1));
  CHECK(agent_net_spec(*lbf, Algo::kPpo).orthogonal_heads);

  NetworkSpec pbq = agent_net_spec(*pb, Algo::kVdn);
  CHECK(pbq.input_size() == pb->observation_size());
  CHECK(pbq.in_c == 7);
  CHECK_THROWS(agent_net_spec(*pb, Algo::kPpo));

  // centralized critics
  NetworkSpec cpp = critic_net_spec(*pp, Algo::kMappo);
  CHECK(cpp.input_size() == 6 * pp->observation_size());
  CHECK(cpp.in_c == 18);
  auto* ppe = dynamic_cast<PredatorPreyEnv*>(pp.get());
  NetworkSpec cst = critic_net_spec(*pp, Algo::kMappoState);
  CHECK(cst.input_size() == ppe->global_state_size());
  NetworkSpec clbf = critic_net_spec(*lbf, Algo::kMappo);
  CHECK(clbf.input_size() == 4 * lbf->observation_size());
  CHECK_THROWS(critic_net_spec(*pp, Algo::kIql));
  CHECK_THROWS(critic_net_spec(*pb, Algo::kMappo));

  CHECK(parse_algo("mappo_state") == Algo::kMappoState);
  CHECK_THROWS(parse_algo("dqn"));
}

TEST_CASE("critic rows pack spatial planes first") {
  const int n = 2, S = 5, spatial = 3;
  std::vector<double> obs = {1, 2, 3, 4, 5,   // agent 1: planes 1..3, tail 4,5
                             6, 7, 8, 9, 10};  // agent 2
  std::vector<double> out(static_cast<std::size_t>(n) * S, -1.0);
  build_critic_input_concat(obs.data(), n, S, spatial, out.data());
  CHECK(out == std::vector<double>{1, 2, 3, 6, 7, 8, 4, 5, 9, 10});

  // fully flat observations degrade to plain concatenation
  build_critic_input_concat(obs.data(), n, S, 0, out.data());
  CHECK(out == std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
}
