#include "fluidrl/harness/fuzz.hpp"

#include <sstream>
#include <stdexcept>
#include <vector>

#include "fluidrl/common/rng.hpp"
#include "fluidrl/env/lbf.hpp"
#include "fluidrl/learn/curriculum.hpp"

namespace fluidrl {

namespace {

[[noreturn]] void fail(long long step, const std::string& what) {
  std::ostringstream msg;
  msg << "fuzz: step " << step << ": " << what;
  throw std::runtime_error(msg.str());
}

}  // namespace

FuzzStats fuzz_env(FluidEnv& env, long long steps, std::uint64_t seed) {
  Rng rng(seed);
  const int A = env.max_agents();
  const int S = env.observation_size();
  const int n_actions = env.num_actions();
  const int spawn = env.spawn_action();
  const int dummy = env.dummy_action();
  const int level_cap = [&]() {
    if (auto* lbf = dynamic_cast<const LbfEnv*>(&env))
      return lbf->max_initial_level();
    return 0;
  }();

  FuzzStats st;
  auto start_episode = [&]() {
    for (int attempt = 0;; ++attempt) {
      PopulationSample ps = sample_population(A, A, level_cap, rng);
      apply_population_sample(env, ps);
      try {
        env.reset(rng.next_u64());
        break;
      } catch (const std::exception&) {
        if (attempt >= 19) throw;
      }
    }
    ++st.episodes;
  };
  start_episode();

  JointAction actions(A);
  std::vector<std::uint8_t> pre_alive(A);
  for (long long t = 0; t < steps; ++t) {
    const PopulationState& pop = env.population();
    const int ceiling = pop.ceiling();
    const int count_pre = pop.alive_count();
    int requested = 0;
    for (int i = 0; i < A; ++i) {
      pre_alive[i] = pop.is_alive(i + 1) ? 1 : 0;
      if (!pre_alive[i]) {
        actions[i] = dummy;
      } else if (rng.uniform() < 0.3) {
        actions[i] = spawn;
        ++requested;
      } else {
        actions[i] = rng.uniform_int(0, n_actions - 1);
        if (actions[i] == spawn) ++requested;
      }
    }

    StepResult sr = env.step(actions);
    ++st.steps;
    const PopulationState& post = env.population();
    const int count_post = post.alive_count();
    st.max_alive = std::max(st.max_alive, count_post);

    if (static_cast<int>(sr.rewards.size()) != A)
      fail(t, "reward vector is not one entry per slot");
    if (static_cast<int>(sr.obs.size()) != A * S)
      fail(t, "observation block has the wrong size");
    if (count_post > ceiling) {
      std::ostringstream m;
      m << "population " << count_post << " exceeds the cap " << ceiling;
      fail(t, m.str());
    }
    for (int i = 0; i < A; ++i)
      if (pre_alive[i] && !post.is_alive(i + 1))
        fail(t, "agent " + std::to_string(i + 1) + " vanished");
    const int grew = count_post - count_pre;
    if (grew != sr.info.spawns)
      fail(t, "population growth disagrees with the spawn count");
    if (grew > std::max(0, ceiling - count_pre))
      fail(t, "spawns pushed the population past the cap");
    if (count_pre >= ceiling && grew != 0)
      fail(t, "a spawn at the cap was not a no-op");
    if (grew > requested) fail(t, "more spawns than requests");
    st.spawns += grew;
    st.denied_spawns += requested - grew;

    for (int i = 0; i < A; ++i) {
      if (!pre_alive[i] && sr.rewards[i] != 0.0)
        fail(t, "dead agent " + std::to_string(i + 1) + " earned a reward");
      if (!post.is_alive(i + 1)) {
        const double* row = sr.obs.data() + static_cast<std::size_t>(i) * S;
        for (int j = 0; j < S; ++j)
          if (row[j] != 0.0)
            fail(t, "dead agent " + std::to_string(i + 1) +
                        " has a nonzero observation");
      }
    }

    if (sr.done) start_episode();
  }
  return st;
}

}  // namespace fluidrl
