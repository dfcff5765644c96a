#include "fluidrl/harness/presets.hpp"

#include <functional>
#include <map>
#include <stdexcept>

namespace fluidrl {

namespace {

Config base(const std::string& name, const std::string& algo,
            const std::string& env) {
  Config c;
  c.set("preset", name);
  c.set("algo", algo);
  c.set("env", env);
  c.set("seed", 1);
  c.set("n_envs", 64);
  c.set("checkpoints", 100);
  c.set("curriculum", true);
  return c;
}

// Pursuit grid, shared by the value and the policy family. Environment
// defaults: 9x9, 6 preys, cap 6, roster 2, capture 5, c_spawn 2, c_step
// 0.01, size-inverse payoff.
Config predprey_value(const std::string& name, bool vdn) {
  Config c = base(name, vdn ? "vdn" : "iql", "predator_prey");
  c.set("total_steps", 300000);
  c.set("lr_init", 1e-3);
  c.set("lr_min", 1e-4);
  c.set("gamma", 0.99);
  c.set("max_grad_norm", 1.0);
  c.set("target_period", 100);
  c.set("batch_size", 128);
  c.set("replay_capacity", 4096);
  c.set("min_replay", 512);
  c.set("replay_ratio", 1);
  c.set("eps_greedy", 0.1);
  c.set("max_eps_spawn", vdn ? 0.05 : 0.1);
  return c;
}

Config predprey_policy(const std::string& name, const std::string& algo) {
  Config c = base(name, algo, "predator_prey");
  c.set("total_steps", 160000);
  c.set("lr_init", 1e-4);
  c.set("gamma", 0.99);
  c.set("max_grad_norm", 0.5);
  c.set("rollout_steps", 20);
  c.set("lam", 0.9);
  c.set("clip", 0.2);
  c.set("vloss_coef", 0.5);
  c.set("ent_coef", 0.05);
  c.set("epochs", 5);
  c.set("minibatches", 20);
  return c;
}

Config lbf_value(const std::string& name, bool vdn) {
  Config c = base(name, vdn ? "vdn" : "iql", "lbf");
  c.set("total_steps", 500000);
  c.set("env.horizon", 50);
  c.set("lr_init", vdn ? 5e-4 : 1e-3);
  c.set("lr_min", 1e-4);
  c.set("gamma", 0.9);
  c.set("max_grad_norm", 1.0);
  c.set("target_period", 100);
  c.set("batch_size", 256);
  c.set("replay_capacity", 20000);
  c.set("min_replay", 1000);
  c.set("replay_ratio", 1);
  c.set("eps_greedy", vdn ? 0.2 : 0.1);
  c.set("max_eps_spawn", 0.1);
  return c;
}

Config lbf_policy(const std::string& name, const std::string& algo) {
  Config c = base(name, algo, "lbf");
  c.set("total_steps", 200000);
  c.set("env.horizon", 50);
  c.set("lr_init", 1e-3);
  c.set("gamma", algo == "mappo" ? 0.99 : 0.9);
  c.set("lam", algo == "mappo" ? 0.9 : 0.95);
  c.set("max_grad_norm", 0.5);
  c.set("rollout_steps", 20);
  c.set("clip", 0.2);
  c.set("vloss_coef", 0.5);
  c.set("ent_coef", 0.01);
  c.set("epochs", 5);
  c.set("minibatches", 5);
  return c;
}

Config puddle_vdn_nosharing() {
  Config c = base("puddle_vdn_nosharing", "vdn", "puddle_bridge");
  c.set("total_steps", 1000000);
  c.set("share", false);
  c.set("replay_ratio", 2);
  c.set("curriculum", false);
  c.set("lr_init", 1e-3);
  c.set("lr_min", 1e-4);
  c.set("gamma", 0.95);
  c.set("max_grad_norm", 1.0);
  c.set("target_period", 100);
  c.set("batch_size", 128);
  c.set("replay_capacity", 4096);
  c.set("min_replay", 512);
  c.set("eps_greedy", 0.3);
  c.set("max_eps_spawn", 0.05);
  return c;
}

// Prey-density ablation cells: fluid starters and fixed rosters that fill
// the cap so spawning is moot.
Config ablation(const std::string& name, int n_prey, int initial, int cap) {
  Config c = predprey_value(name, /*vdn=*/true);
  c.set("total_steps", initial == cap ? 300000 : 600000);
  c.set("env.n_prey", n_prey);
  c.set("env.payoff", "sip");
  c.set("env.c_spawn", 2.0);
  c.set("env.initial_agents", initial);
  c.set("env.max_agents", cap);
  if (initial == cap) c.set("curriculum", false);
  return c;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {
      "predprey_iql",        "predprey_vdn",
      "predprey_ppo",        "predprey_mappo",
      "predprey_mappo_state",
      "lbf_iql",             "lbf_vdn",
      "lbf_ppo",             "lbf_mappo",
      "puddle_vdn_nosharing",
      "predprey_ablation_p4", "predprey_ablation_p12",
      "predprey_fixed2_p4",  "predprey_fixed4_p4",  "predprey_fixed6_p4",
      "predprey_fixed2_p12", "predprey_fixed4_p12", "predprey_fixed6_p12",
  };
}

Config preset_config(const std::string& name) {
  if (name == "predprey_iql") return predprey_value(name, false);
  if (name == "predprey_vdn") return predprey_value(name, true);
  if (name == "predprey_ppo") return predprey_policy(name, "ppo");
  if (name == "predprey_mappo") return predprey_policy(name, "mappo");
  if (name == "predprey_mappo_state")
    return predprey_policy(name, "mappo_state");
  if (name == "lbf_iql") return lbf_value(name, false);
  if (name == "lbf_vdn") return lbf_value(name, true);
  if (name == "lbf_ppo") return lbf_policy(name, "ppo");
  if (name == "lbf_mappo") return lbf_policy(name, "mappo");
  if (name == "puddle_vdn_nosharing") return puddle_vdn_nosharing();
  if (name == "predprey_ablation_p4") return ablation(name, 4, 2, 6);
  if (name == "predprey_ablation_p12") return ablation(name, 12, 2, 6);
  if (name == "predprey_fixed2_p4") return ablation(name, 4, 2, 2);
  if (name == "predprey_fixed4_p4") return ablation(name, 4, 4, 4);
  if (name == "predprey_fixed6_p4") return ablation(name, 4, 6, 6);
  if (name == "predprey_fixed2_p12") return ablation(name, 12, 2, 2);
  if (name == "predprey_fixed4_p12") return ablation(name, 12, 4, 4);
  if (name == "predprey_fixed6_p12") return ablation(name, 12, 6, 6);
  std::string msg = "unknown preset '" + name + "'; known:";
  for (const std::string& p : preset_names()) msg += " " + p;
  throw std::runtime_error(msg);
}

}  // namespace fluidrl
