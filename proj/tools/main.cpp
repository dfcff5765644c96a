#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fluidrl/common/config.hpp"
#include "fluidrl/env/registry.hpp"
#include "fluidrl/eq/solve.hpp"
#include "fluidrl/eq/tabular.hpp"
#include "fluidrl/harness/eval.hpp"
#include "fluidrl/harness/fuzz.hpp"
#include "fluidrl/harness/presets.hpp"
#include "fluidrl/harness/report.hpp"
#include "fluidrl/harness/train.hpp"

namespace {

namespace fs = std::filesystem;
using fluidrl::Config;

void apply_overrides(Config& cfg, const std::vector<std::string>& sets) {
  for (const std::string& kv : sets) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::runtime_error("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
}

int cmd_train(const std::string& preset, const std::string& config_file,
              int seed, long long steps, const std::string& out,
              const std::string& run_id, const std::vector<std::string>& sets) {
  Config cfg;
  if (!preset.empty()) cfg = fluidrl::preset_config(preset);
  if (!config_file.empty()) {
    Config file_cfg = Config::load_file(config_file);
    for (const auto& [k, v] : file_cfg.items()) cfg.set(k, v);
  }
  if (!cfg.has("algo"))
    throw std::runtime_error("train needs --preset or --config");
  if (seed >= 0) cfg.set("seed", seed);
  if (steps >= 0) cfg.set("total_steps", static_cast<int>(steps));
  if (!out.empty()) cfg.set("out", out);
  if (!run_id.empty()) cfg.set("run_id", run_id);
  apply_overrides(cfg, sets);

  fluidrl::TrainResult res = fluidrl::train_run(cfg);
  std::cout << "run dir: " << res.run_dir << "\n"
            << "env steps: " << res.env_steps << ", updates: " << res.updates
            << ", episodes: " << res.episodes << "\n"
            << "checkpoints: " << res.checkpoint_paths.size() << "\n";
  if (res.aborted) {
    std::cout << "ABORTED: " << res.abort_reason << "\n";
    return 2;
  }
  return 0;
}

int cmd_eval(const std::string& ckpt, int episodes, int seed,
             std::string out) {
  fluidrl::EvalReport rep = fluidrl::evaluate_checkpoint(
      ckpt, episodes, static_cast<std::uint64_t>(seed));
  if (out.empty()) {
    fs::path p(ckpt);
    out = (p.parent_path() / ("eval_" + p.stem().string() + ".csv")).string();
  }
  fluidrl::write_eval_csv(rep, out);
  std::printf("episodes %d  return %.4f +- %.4f  end population %.3f\n",
              rep.episodes, rep.return_mean, rep.return_std, rep.alive_mean);
  if (rep.gate_open_n + rep.gate_closed_n > 0)
    std::printf("gate open: %d episodes, return %.4f; gate closed: %d episodes, return %.4f\n",
                rep.gate_open_n, rep.gate_open_return_mean, rep.gate_closed_n,
                rep.gate_closed_return_mean);
  for (const auto& [lvl, mean] : rep.spawned_per_level)
    std::printf("spawned level %d: %.3f per episode\n", lvl, mean);
  std::cout << "episode log: " << out << "\n";
  return 0;
}

nlohmann::json policy_to_json(const fluidrl::BehavioralStrategy& s) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& stage : s.stages) stages.push_back(stage);
  return stages;
}

fluidrl::BehavioralStrategy policy_from_json(const nlohmann::json& j) {
  fluidrl::BehavioralStrategy s;
  for (const auto& stage : j.at("stages"))
    s.stages.push_back(stage.get<fluidrl::StagePolicy>());
  return s;
}

int cmd_solve_spne(const std::string& game_file, const std::string& out) {
  fluidrl::TabularGame game = fluidrl::TabularGame::load(game_file);
  fluidrl::SpneResult res = fluidrl::backward_induction_spne(game);
  nlohmann::json j;
  j["game"] = game.name;
  j["stages"] = policy_to_json(res.strategy);
  j["start_values"] = res.values[0][game.start];
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream f(out);
    f << j.dump(2) << "\n";
    std::cout << "policy written to " << out << "\n";
  }
  std::cout << "values at the start state:";
  for (std::size_t i = 0; i < res.values[0][game.start].size(); ++i)
    std::printf(" a%zu=%.6g", i + 1, res.values[0][game.start][i]);
  std::cout << "\n";
  return 0;
}

int cmd_verify_ne(const std::string& game_file, const std::string& policy_file,
                  double tol) {
  fluidrl::TabularGame game = fluidrl::TabularGame::load(game_file);
  std::ifstream f(policy_file);
  if (!f) throw std::runtime_error("cannot read " + policy_file);
  nlohmann::json j;
  f >> j;
  fluidrl::BehavioralStrategy policy = policy_from_json(j);
  fluidrl::NashVerdict v = fluidrl::verify_nash(game, policy, tol);
  if (v.is_ne) {
    std::printf("equilibrium within tol %g (worst deviation gain %.3g)\n", tol,
                v.worst_gain);
    return 0;
  }
  std::printf(
      "NOT an equilibrium: agent %d gains %.6g (stage %d, state %d)\n",
      v.agent, v.worst_gain, v.stage, v.state);
  return 1;
}

int cmd_fuzz(const std::string& env_name, long long steps, int seed,
             const std::vector<std::string>& sets) {
  Config cfg;
  cfg.set("env", env_name);
  apply_overrides(cfg, sets);
  auto env = fluidrl::make_env(cfg);
  fluidrl::FuzzStats st =
      fluidrl::fuzz_env(*env, steps, static_cast<std::uint64_t>(seed));
  std::printf(
      "ok: %lld steps, %lld episodes, %lld spawns granted, %lld denied at "
      "the cap, peak population %d\n",
      st.steps, st.episodes, st.spawns, st.denied_spawns, st.max_alive);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fluid-population multi-agent RL workbench"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "train a preset or config");
  std::string tr_preset, tr_config, tr_out, tr_run_id;
  int tr_seed = -1;
  long long tr_steps = -1;
  std::vector<std::string> tr_sets;
  train->add_option("--preset", tr_preset, "named preset");
  train->add_option("--config", tr_config, "key = value config file");
  train->add_option("--seed", tr_seed, "rng seed");
  train->add_option("--steps", tr_steps, "total environment steps");
  train->add_option("--out", tr_out, "output root directory");
  train->add_option("--run-id", tr_run_id, "run directory name");
  train->add_option("--set", tr_sets, "override key=value")->take_all();

  auto* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
  std::string ev_ckpt, ev_out;
  int ev_episodes = 0, ev_seed = 1;
  eval->add_option("--ckpt", ev_ckpt, "checkpoint file")->required();
  eval->add_option("--episodes", ev_episodes, "episode count")->required();
  eval->add_option("--seed", ev_seed, "rng seed");
  eval->add_option("--out", ev_out, "episode log path");

  auto* report = app.add_subcommand("report", "aggregate runs into charts");
  std::string rp_runs, rp_out;
  report->add_option("--runs", rp_runs, "directory of run directories")
      ->required();
  report->add_option("--out", rp_out, "report output directory")->required();

  auto* eq = app.add_subcommand("eq", "tabular equilibrium lab");
  eq->require_subcommand(1);
  auto* solve = eq->add_subcommand("solve-spne", "backward-induction SPNE");
  std::string eq_game, eq_out;
  solve->add_option("--game", eq_game, "game description file")->required();
  solve->add_option("--out", eq_out, "write the policy JSON here");
  auto* verify = eq->add_subcommand("verify-ne", "best-response check");
  std::string vf_game, vf_policy;
  double vf_tol = 1e-9;
  verify->add_option("--game", vf_game, "game description file")->required();
  verify->add_option("--policy", vf_policy, "policy JSON")->required();
  verify->add_option("--tol", vf_tol, "deviation gain tolerance");

  auto* envcmd = app.add_subcommand("env", "environment utilities");
  envcmd->require_subcommand(1);
  auto* fuzz = envcmd->add_subcommand("fuzz", "randomized invariant checking");
  std::string fz_env;
  long long fz_steps = 100000;
  int fz_seed = 1;
  std::vector<std::string> fz_sets;
  fuzz->add_option("--env", fz_env, "environment name")->required();
  fuzz->add_option("--steps", fz_steps, "step budget");
  fuzz->add_option("--seed", fz_seed, "rng seed");
  fuzz->add_option("--set", fz_sets, "environment key=value")->take_all();

  auto* presets = app.add_subcommand("presets", "list named presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train)
      return cmd_train(tr_preset, tr_config, tr_seed, tr_steps, tr_out,
                       tr_run_id, tr_sets);
    if (*eval) return cmd_eval(ev_ckpt, ev_episodes, ev_seed, ev_out);
    if (*report) {
      fluidrl::ReportSummary s =
          fluidrl::write_report({rp_runs, rp_out});
      std::cout << s.runs << " runs, " << s.groups << " groups, "
                << s.files.size() << " artifacts in " << rp_out << "\n";
      return 0;
    }
    if (*solve) return cmd_solve_spne(eq_game, eq_out);
    if (*verify) return cmd_verify_ne(vf_game, vf_policy, vf_tol);
    if (*fuzz) return cmd_fuzz(fz_env, fz_steps, fz_seed, fz_sets);
    if (*presets) {
      for (const std::string& p : fluidrl::preset_names())
        std::cout << p << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
