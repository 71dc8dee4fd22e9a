// regretlab command-line driver: gen | plan | run | sweep | audit | report
//
// exit codes: 0 success, 2 invalid config or environment, 3 audit failure

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "regretlab/agents.hpp"
#include "regretlab/envs.hpp"
#include "regretlab/mdp_io.hpp"
#include "regretlab/metrics.hpp"
#include "regretlab/planner.hpp"
#include "regretlab/simulate.hpp"
#include "regretlab/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace regretlab;

namespace {

std::vector<std::uint64_t> parse_checkpoints(const std::string& spec, std::uint64_t K) {
  if (spec == "pow2" || spec.empty()) return {};
  std::vector<std::uint64_t> out;
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(std::stoull(tok));
  std::sort(out.begin(), out.end());
  for (std::uint64_t c : out)
    if (c < 1 || c > K) throw std::invalid_argument("checkpoint outside [1, episodes]");
  return out;
}

int cmd_gen(const std::string& family, const json& params, const std::string& out) {
  TabularMdp m = make_env(json{{"family", family}, {"params", params}});
  save_mdp(m, out);
  std::cout << "wrote " << out << " (" << m.name() << ": S=" << m.S << " A=" << m.A
            << " H=" << m.H << ")\n";
  return 0;
}

int cmd_plan(const std::string& env_path, const std::string& exec,
             const std::string& out, bool with_var1, std::optional<std::uint64_t> var2_cap) {
  const TabularMdp m = load_mdp(env_path);
  const Exec ex = exec == "serial" ? Exec::serial : Exec::parallel;
  const PlanResult plan = bellman_optimal(m, ex);

  json j;
  j["env_id"] = m.name();
  j["mode"] = m.mode == RewardMode::reward ? "reward" : "cost";
  if (m.mode == RewardMode::reward) {
    j["v_star"] = compute_v_star(m);
  } else {
    j["c_star"] = compute_c_star(m);
  }
  std::optional<double> var1_v, var2_v;
  if (with_var1 && m.mode == RewardMode::reward) {
    var1_v = compute_var1(m);
    j["var1"] = *var1_v;
  }
  if (var2_cap && m.mode == RewardMode::reward) {
    var2_v = compute_var2_oracle(m, *var2_cap);
    if (var2_v)
      j["var2"] = *var2_v;
    else
      j["var2"] = "unavailable";
  }
  // var := min over whichever proxies were computed
  if (var1_v && var2_v)
    j["var"] = std::min(*var1_v, *var2_v);
  else if (var1_v)
    j["var"] = *var1_v;
  else if (var2_v)
    j["var"] = *var2_v;
  json vrows = json::array();
  for (int h = 1; h <= m.H + 1; ++h) {
    json row = json::array();
    for (int s = 0; s < m.S; ++s) row.push_back(plan.vt.V(h, s));
    vrows.push_back(std::move(row));
  }
  j["v"] = std::move(vrows);
  json pol = json::array();
  for (int h = 1; h <= m.H; ++h) {
    json row = json::array();
    for (int s = 0; s < m.S; ++s) row.push_back(plan.pi.at(h, s));
    pol.push_back(std::move(row));
  }
  j["policy"] = std::move(pol);

  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << j.dump(2) << "\n";
  }
  if (m.mode == RewardMode::reward)
    std::cout << m.name() << ": v* = " << csv_num(j["v_star"].get<double>()) << "\n";
  else
    std::cout << m.name() << ": c* = " << csv_num(j["c_star"].get<double>()) << "\n";
  return 0;
}

int cmd_run(const std::string& env_path, const std::string& agent_name, std::uint64_t K,
            std::uint64_t seed, double delta, const std::string& backend,
            const std::string& checkpoints, const std::string& out_dir, bool snapshot,
            bool traj, bool wall_ms) {
  const TabularMdp env = load_mdp(env_path);
  RunOptions opts;
  opts.K = K;
  opts.checkpoints = parse_checkpoints(checkpoints, K);
  opts.backend = backend;
  opts.record_trajectories = traj;
  opts.record_wall_ms = wall_ms;

  json agent_spec{{"name", agent_name}};
  if (agent_name == "mvp" || agent_name == "ucbvi") agent_spec["delta"] = delta;
  RunResult run = run_online(env, agent_spec, seed, opts);

  const AuditResult audit = audit_run(env, run);

  fs::create_directories(out_dir);
  const std::string run_id =
      env.name() + "__" + agent_spec_id(agent_spec) + "__s" + std::to_string(seed);
  {
    std::ofstream f(fs::path(out_dir) / "run.csv");
    f << "run_id,env_id,agent,seed,K_budget,checkpoint_k,cum_regret,epochs,refreshes,"
         "optimism_violations,wall_ms\n";
    for (const auto& r : run.checkpoints)
      f << run_id << "," << env.name() << "," << agent_spec_id(agent_spec) << "," << seed
        << "," << K << "," << r.k << "," << csv_num(r.cum_regret) << "," << r.epochs
        << "," << r.refreshes << "," << r.optimism_violations << ","
        << csv_num(wall_ms ? run.wall_ms : 0.0) << "\n";
  }
  {
    std::ofstream f(fs::path(out_dir) / "audit.json");
    f << audit.to_json().dump(2) << "\n";
  }
  if (snapshot) {
    std::ofstream f(fs::path(out_dir) / "snapshot.json");
    f << run.agent_snapshot.dump(2) << "\n";
  }
  if (traj) {
    json t = json::array();
    for (const auto& ep : run.trajectories) {
      json steps = json::array();
      for (const auto& st : ep.steps)
        steps.push_back(json::array({st.h, st.s, st.a, st.r, st.s_next}));
      t.push_back(json{{"k", ep.k}, {"policy_epoch", ep.policy_epoch},
                       {"reward_sum", ep.reward_sum}, {"steps", std::move(steps)}});
    }
    std::ofstream f(fs::path(out_dir) / "trajectories.json");
    f << t.dump() << "\n";
  }

  std::cout << run_id << ": cum_regret=" << csv_num(run.ledger.cum)
            << " epochs=" << run.epochs << " refreshes=" << run.refreshes
            << " optimism_violations=" << run.optimism_violations
            << (audit.pass() ? " [audits ok]" : " [AUDIT FAILURE]") << "\n";
  return audit.pass() ? 0 : 3;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> episodes, const std::string& backend,
              const std::string& seeds_csv, int jobs) {
  ExperimentConfig cfg = ExperimentConfig::load(config_path);
  if (episodes) {
    cfg.episodes = *episodes;
    cfg.raw["episodes"] = *episodes;
  }
  if (!backend.empty()) {
    if (backend != "ondemand" && backend != "expanded")
      throw std::invalid_argument("backend must be ondemand or expanded");
    cfg.backend = backend;
    cfg.raw["backend"] = backend;
  }
  if (!seeds_csv.empty()) {
    cfg.seeds.clear();
    std::stringstream ss(seeds_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) cfg.seeds.push_back(std::stoull(tok));
    cfg.raw["seeds"] = cfg.seeds;
  }
  if (jobs > 0) cfg.jobs = jobs;

  const SweepOutcome oc = run_sweep(cfg, out_dir);
  for (const auto& w : oc.warnings) std::cerr << "warning: " << w << "\n";
  if (oc.exit_code == 2) {
    std::cerr << "error: " << oc.error << "\n";
    return 2;
  }
  std::cout << "sweep -> " << out_dir << " config_hash=" << hash_hex(oc.config_hash)
            << " content_hash=" << hash_hex(oc.content_hash)
            << (oc.audits_pass ? " [audits ok]" : " [AUDIT FAILURE]") << "\n";
  return oc.exit_code;
}

int cmd_audit(const std::string& run_dir) {
  std::string summary;
  const int rc = audit_dir(run_dir, &summary);
  if (rc == 2) {
    std::cerr << "error: no readable audits.json under " << run_dir << "\n";
    return 2;
  }
  std::cout << summary;
  std::cout << (rc == 0 ? "all audits pass\n" : "audit failures present\n");
  return rc;
}

int cmd_report(const std::string& run_dir, std::uint64_t fit_min) {
  const int rc = write_report(run_dir, fit_min);
  if (rc != 0) {
    std::cerr << "error: no readable runs.csv under " << run_dir << "\n";
    return rc;
  }
  std::cout << "wrote " << (fs::path(run_dir) / "report.csv").string() << " and "
            << (fs::path(run_dir) / "fits.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regretlab: episodic tabular RL regret experiments"};
  app.set_version_flag("--version", std::string("regretlab ") + kToolVersion);
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate an instance file");
  std::string g_family, g_out = "env.json", g_inner;
  int g_S = 2, g_A = 2, g_H = 6;
  std::uint64_t g_seed = 1;
  double g_density = 0.5, g_c1 = 4.0, g_p = 0.1;
  gen->add_option("--family", g_family, "random|jao|hardchain|branchwrap|costlayer")
      ->required();
  gen->add_option("--S", g_S);
  gen->add_option("--A", g_A);
  gen->add_option("--H", g_H);
  gen->add_option("--seed", g_seed);
  gen->add_option("--density", g_density, "reward density (random)");
  gen->add_option("--c1", g_c1, "jao constant");
  gen->add_option("--p", g_p, "branch/cost probability");
  gen->add_option("--inner", g_inner, "inner instance file (branchwrap)");
  gen->add_option("--out", g_out);

  // plan
  auto* plan = app.add_subcommand("plan", "exact planning and instance metrics");
  std::string p_env, p_exec = "parallel", p_out;
  bool p_var1 = false;
  std::uint64_t p_var2_cap = 0;
  plan->add_option("--env", p_env)->required();
  plan->add_option("--exec", p_exec, "serial|parallel");
  plan->add_option("--out", p_out, "write plan JSON here");
  plan->add_flag("--var1", p_var1, "also compute var1");
  plan->add_option("--var2-cap", p_var2_cap, "compute var2 with this policy cap");

  // run
  auto* runc = app.add_subcommand("run", "single online run");
  std::string r_env, r_agent = "mvp", r_backend = "ondemand", r_cp = "pow2",
              r_out = "run_out";
  std::uint64_t r_K = 1024, r_seed = 1;
  double r_delta = 0.1;
  bool r_snapshot = false, r_traj = false, r_wall = false;
  runc->add_option("--env", r_env)->required();
  runc->add_option("--agent", r_agent, "mvp|ucbvi|random|oracle");
  runc->add_option("--episodes", r_K);
  runc->add_option("--seed", r_seed);
  runc->add_option("--delta", r_delta);
  runc->add_option("--backend", r_backend, "ondemand|expanded");
  runc->add_option("--checkpoints", r_cp, "pow2 or comma list");
  runc->add_option("--out", r_out);
  runc->add_flag("--snapshot", r_snapshot, "write agent snapshot");
  runc->add_flag("--traj", r_traj, "write trajectories");
  runc->add_flag("--wall-ms", r_wall, "record wall time (breaks byte determinism)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "envs x agents x seeds grid");
  std::string s_config, s_out = "sweep_out", s_backend, s_seeds;
  std::uint64_t s_episodes = 0;
  int s_jobs = 0;
  sweep->add_option("--config", s_config)->required();
  sweep->add_option("--out", s_out);
  sweep->add_option("--episodes", s_episodes, "override config episodes");
  sweep->add_option("--backend", s_backend, "override config backend");
  sweep->add_option("--seeds", s_seeds, "override config seeds (comma list)");
  sweep->add_option("--jobs", s_jobs, "worker threads (or REGRETLAB_JOBS)");

  // audit / report
  auto* audit = app.add_subcommand("audit", "re-check recorded audits");
  std::string a_dir;
  audit->add_option("--run", a_dir)->required();
  auto* report = app.add_subcommand("report", "aggregate runs.csv");
  std::string t_dir;
  std::uint64_t t_fitmin = 128;
  report->add_option("--run", t_dir)->required();
  report->add_option("--fit-min", t_fitmin, "smallest checkpoint used in fits");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // bad flags are config errors
  }

  try {
    if (gen->parsed()) {
      json params;
      if (g_family == "random")
        params = {{"S", g_S}, {"A", g_A}, {"H", g_H}, {"seed", g_seed},
                  {"reward_density", g_density}};
      else if (g_family == "jao")
        params = {{"H", g_H}, {"A", g_A}, {"c1_const", g_c1}};
      else if (g_family == "hardchain")
        params = {{"S", g_S}, {"A", g_A}, {"H", g_H}, {"seed", g_seed}};
      else if (g_family == "branchwrap")
        params = {{"p", g_p}, {"inner", {{"file", g_inner}}}};
      else if (g_family == "costlayer")
        params = {{"H", g_H}, {"p", g_p}, {"A", g_A}, {"seed", g_seed}};
      else
        throw std::invalid_argument("unknown family: " + g_family);
      return cmd_gen(g_family, params, g_out);
    }
    if (plan->parsed())
      return cmd_plan(p_env, p_exec, p_out, p_var1,
                      p_var2_cap ? std::optional<std::uint64_t>(p_var2_cap)
                                 : std::nullopt);
    if (runc->parsed())
      return cmd_run(r_env, r_agent, r_K, r_seed, r_delta, r_backend, r_cp, r_out,
                     r_snapshot, r_traj, r_wall);
    if (sweep->parsed())
      return cmd_sweep(s_config, s_out,
                       s_episodes ? std::optional<std::uint64_t>(s_episodes)
                                  : std::nullopt,
                       s_backend, s_seeds, s_jobs);
    if (audit->parsed()) return cmd_audit(a_dir);
    if (report->parsed()) return cmd_report(t_dir, t_fitmin);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
