#include "fluidrl/learn/arch.hpp"

#include <cstring>
#include <stdexcept>

#include "fluidrl/env/lbf.hpp"
#include "fluidrl/env/predator_prey.hpp"
#include "fluidrl/env/puddle_bridge.hpp"

namespace fluidrl {

Algo parse_algo(const std::string& name) {
  if (name == "iql") return Algo::kIql;
  if (name == "vdn") return Algo::kVdn;
  if (name == "ppo") return Algo::kPpo;
  if (name == "mappo") return Algo::kMappo;
  if (name == "mappo_state") return Algo::kMappoState;
  throw std::runtime_error("unknown algorithm: " + name);
}

const char* algo_name(Algo algo) {
  switch (algo) {
    case Algo::kIql: return "iql";
    case Algo::kVdn: return "vdn";
    case Algo::kPpo: return "ppo";
    case Algo::kMappo: return "mappo";
    case Algo::kMappoState: return "mappo_state";
  }
  return "?";
}

namespace {

NetworkSpec pp_agent(const PredatorPreyEnv& env, Algo algo) {
  const int w = PredatorPreyEnv::kWindow;
  NetworkSpec s;
  s.in_c = 3;
  s.in_h = w;
  s.in_w = w;
  s.conv_channels = {8, 16};
  s.tail_dim = env.observation_size() - 3 * w * w;
  s.actions = env.num_actions();
  if (is_value_based(algo)) {
    s.trunk = {128, 64};
    s.head = Head::kDuelingQ;
  } else {
    s.trunk = {128};
    s.head = algo == Algo::kPpo ? Head::kPolicyValue : Head::kPolicy;
    s.head_hidden = 64;
  }
  return s;
}

NetworkSpec lbf_agent(const LbfEnv& env, Algo algo) {
  NetworkSpec s;
  s.tail_dim = env.observation_size();
  s.actions = env.num_actions();
  if (is_value_based(algo)) {
    s.trunk = {128, 256, 256};
    s.layernorm = true;
    s.dropout = 0.1;
    s.head = Head::kDuelingQ;
  } else {
    s.trunk = {64, 128, 256, 128};
    s.head = algo == Algo::kPpo ? Head::kPolicyValue : Head::kPolicy;
    s.orthogonal_heads = true;
  }
  return s;
}

NetworkSpec pb_agent(const PuddleBridgeEnv& env, Algo algo) {
  if (!is_value_based(algo))
    throw std::runtime_error("no actor-critic layout for this environment");
  NetworkSpec s;
  s.in_c = 7;
  s.in_h = 8;
  s.in_w = 8;
  s.conv_channels = {8, 16};
  s.tail_dim = env.observation_size() - 7 * 8 * 8;
  s.trunk = {128, 64};
  s.head = Head::kDuelingQ;
  s.actions = env.num_actions();
  return s;
}

}  // namespace

NetworkSpec agent_net_spec(const FluidEnv& env, Algo algo) {
  if (auto* pp = dynamic_cast<const PredatorPreyEnv*>(&env))
    return pp_agent(*pp, algo);
  if (auto* lbf = dynamic_cast<const LbfEnv*>(&env))
    return lbf_agent(*lbf, algo);
  if (auto* pb = dynamic_cast<const PuddleBridgeEnv*>(&env))
    return pb_agent(*pb, algo);
  throw std::runtime_error("no default network for this environment");
}

NetworkSpec critic_net_spec(const FluidEnv& env, Algo algo) {
  if (algo != Algo::kMappo && algo != Algo::kMappoState)
    throw std::runtime_error("centralized critic only for mappo variants");
  const int n = env.max_agents();
  if (auto* pp = dynamic_cast<const PredatorPreyEnv*>(&env)) {
    const int w = PredatorPreyEnv::kWindow;
    NetworkSpec s;
    s.conv_channels = {16, 16};
    s.trunk = {128, 64};
    s.head = Head::kValue;
    if (algo == Algo::kMappoState) {
      s.in_c = 2;
      s.in_h = pp->grid_size();
      s.in_w = pp->grid_size();
      s.tail_dim = pp->global_state_size() - s.spatial_size();
    } else {
      s.in_c = 3 * n;
      s.in_h = w;
      s.in_w = w;
      s.tail_dim = n * (pp->observation_size() - 3 * w * w);
    }
    return s;
  }
  if (auto* lbf = dynamic_cast<const LbfEnv*>(&env)) {
    if (algo == Algo::kMappoState)
      throw std::runtime_error("no global state layout for this environment");
    NetworkSpec s;
    s.tail_dim = n * lbf->observation_size();
    s.trunk = {64, 128, 256, 128};
    s.head = Head::kValue;
    s.orthogonal_heads = true;
    return s;
  }
  throw std::runtime_error("no critic layout for this environment");
}

int obs_spatial_size(const FluidEnv& env) {
  if (dynamic_cast<const PredatorPreyEnv*>(&env)) {
    const int w = PredatorPreyEnv::kWindow;
    return 3 * w * w;
  }
  if (dynamic_cast<const PuddleBridgeEnv*>(&env)) return 7 * 8 * 8;
  return 0;
}

void build_critic_input_concat(const double* obs, int n_agents, int obs_size,
                               int spatial, double* out) {
  const int tail = obs_size - spatial;
  for (int j = 0; j < n_agents; ++j) {
    const double* row = obs + static_cast<std::size_t>(j) * obs_size;
    if (spatial > 0)
      std::memcpy(out + static_cast<std::size_t>(j) * spatial, row,
                  sizeof(double) * spatial);
    std::memcpy(out + static_cast<std::size_t>(n_agents) * spatial +
                    static_cast<std::size_t>(j) * tail,
                row + spatial, sizeof(double) * tail);
  }
}

}  // namespace fluidrl
