#include "regretlab/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "regretlab/agents.hpp"
#include "regretlab/envs.hpp"
#include "regretlab/metrics.hpp"
#include "regretlab/simulate.hpp"

namespace regretlab {

using nlohmann::json;
namespace fs = std::filesystem;

std::uint64_t fnv1a64(const void* data, std::size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string hash_hex(std::uint64_t h) {
  char buf[19];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t config_hash(const json& config) { return fnv1a64(config.dump()); }

std::string csv_num(double x) { return json(x).dump(); }

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;

  if (j.contains("version") && j.at("version") != kConfigSchemaVersion)
    throw std::invalid_argument("config: schema version mismatch, want " +
                                std::string(kConfigSchemaVersion));

  if (j.contains("envs"))
    cfg.envs = j.at("envs").get<std::vector<json>>();
  else if (j.contains("env"))
    cfg.envs = {j.at("env")};
  if (cfg.envs.empty()) throw std::invalid_argument("config: no envs given");

  if (!j.contains("agents") || !j.at("agents").is_array() || j.at("agents").empty())
    throw std::invalid_argument("config: agents must be a non-empty array");
  for (const auto& a : j.at("agents")) {
    if (!a.contains("name")) throw std::invalid_argument("config: agent without name");
    cfg.agents.push_back(a);
  }

  cfg.episodes = j.value("episodes", std::uint64_t{1024});
  if (cfg.episodes == 0) throw std::invalid_argument("config: episodes must be >= 1");

  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    if (s.is_array()) {
      cfg.seeds = s.get<std::vector<std::uint64_t>>();
    } else if (s.is_object()) {
      const auto master = s.at("master_seed").get<std::uint64_t>();
      const auto reps = s.at("replications").get<std::uint64_t>();
      for (std::uint64_t i = 0; i < reps; ++i)
        cfg.seeds.push_back(derive_seed(master, StreamPurpose::seed_derive, i));
    } else {
      throw std::invalid_argument("config: seeds must be a list or {master_seed, replications}");
    }
  } else {
    cfg.seeds = {1};
  }
  if (cfg.seeds.empty()) throw std::invalid_argument("config: empty seed list");
  {
    auto sorted = cfg.seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw std::invalid_argument("config: duplicate seeds");
  }

  if (j.contains("checkpoints")) {
    const json& c = j.at("checkpoints");
    if (c.is_string()) {
      if (c.get<std::string>() != "pow2")
        throw std::invalid_argument("config: checkpoints must be \"pow2\" or a list");
    } else if (c.is_array()) {
      cfg.checkpoint_list = c.get<std::vector<std::uint64_t>>();
      std::sort(cfg.checkpoint_list.begin(), cfg.checkpoint_list.end());
      for (std::uint64_t x : cfg.checkpoint_list)
        if (x < 1 || x > cfg.episodes)
          throw std::invalid_argument("config: checkpoint outside [1, episodes]");
    } else {
      throw std::invalid_argument("config: bad checkpoints field");
    }
  }

  cfg.backend = j.value("backend", std::string("ondemand"));
  if (cfg.backend != "ondemand" && cfg.backend != "expanded")
    throw std::invalid_argument("config: backend must be ondemand or expanded");
  cfg.record_wall_ms = j.value("record_wall_ms", false);
  cfg.jobs = j.value("jobs", 0);
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config parse error: " + std::string(e.what()));
  }
  return from_json(j);
}

namespace {

struct Cell {
  int env_idx, agent_idx, seed_idx;
  std::string run_id, env_id, agent_id;
  std::uint64_t seed;
};

struct CellOutput {
  bool ok = false;
  std::string error;
  std::vector<CheckpointRow> rows;
  double wall_ms = 0.0;
  json audit_payload;
  json audit_result;
  bool audit_pass = true;
};

int resolve_jobs(int cfg_jobs) {
  if (cfg_jobs > 0) return cfg_jobs;
  if (const char* e = std::getenv("REGRETLAB_JOBS")) {
    const int v = std::atoi(e);
    if (v > 0) return v;
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

CellOutput run_cell(const TabularMdp& env, const json& agent_spec,
                    const ExperimentConfig& cfg, std::uint64_t seed) {
  CellOutput out;
  RunOptions opts;
  opts.K = cfg.episodes;
  opts.checkpoints = cfg.checkpoint_list;
  opts.backend = cfg.backend;
  opts.record_wall_ms = cfg.record_wall_ms;

  // cells must run serial inside: the sweep owns the thread pool
  auto agent = make_agent(agent_spec, env, opts.K, seed, Exec::serial);
  auto backend = make_backend(cfg.backend, env, seed, opts.K);
  RunResult run = run_online(env, *agent, *backend, opts);
  run.seed = seed;

  const AuditResult audit = audit_run(env, run);
  out.audit_result = audit.to_json();
  out.audit_pass = audit.pass();

  // compact payload for later re-audit by the audit verb
  std::uint64_t max_refresh = 0;
  bool profile_ok = true;
  const bool is_mvp = run.agent_snapshot.value("agent", "") == "mvp";
  for (const auto& c : audit.checks) {
    if (c.name == "profile_consistency" && c.applicable) profile_ok = c.pass;
  }
  if (is_mvp) {
    const auto& rc = run.agent_snapshot.at("counters").at("refresh_count");
    for (const auto& lh : rc)
      for (const auto& ls : lh)
        for (const auto& x : ls) max_refresh = std::max(max_refresh, x.get<std::uint64_t>());
  }
  bool ledger_ok = true;
  for (const auto& c : audit.checks)
    if (c.name == "ledger") ledger_ok = c.pass;
  out.audit_payload = json{{"K", run.K},
                           {"S", env.S},
                           {"A", env.A},
                           {"H", env.H},
                           {"has_q_tables", run.agent_snapshot.contains("tables")},
                           {"is_mvp", is_mvp},
                           {"optimism_violations", run.optimism_violations},
                           {"max_refresh_count", max_refresh},
                           {"inv_count_sum", run.inv_count_sum},
                           {"profile_consistent", profile_ok},
                           {"ledger_ok", ledger_ok},
                           {"cum_regret", run.ledger.cum}};
  out.rows = run.checkpoints;
  out.wall_ms = run.wall_ms;
  out.ok = true;
  return out;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << content;
  if (!f) throw std::runtime_error("write failed: " + p.string());
}

}  // namespace

SweepOutcome run_sweep(const ExperimentConfig& cfg, const std::string& out_dir) {
  SweepOutcome oc;
  oc.out_dir = out_dir;
  oc.config_hash = config_hash(cfg.raw);

  if (cfg.episodes & (cfg.episodes - 1))
    oc.warnings.push_back("episodes=" + std::to_string(cfg.episodes) +
                          " is not a power of two; checkpoint spacing will be uneven");

  // build envs and agent ids up front; any failure here is a config error
  std::vector<TabularMdp> envs;
  std::vector<std::string> agent_ids;
  try {
    for (const auto& e : cfg.envs) envs.push_back(make_env(e));
    for (const auto& a : cfg.agents) agent_ids.push_back(agent_spec_id(a));
    fs::create_directories(out_dir);
  } catch (const std::exception& e) {
    oc.exit_code = 2;
    oc.error = e.what();
    return oc;
  }

  std::vector<Cell> cells;
  for (int ei = 0; ei < static_cast<int>(envs.size()); ++ei)
    for (int ai = 0; ai < static_cast<int>(cfg.agents.size()); ++ai)
      for (int si = 0; si < static_cast<int>(cfg.seeds.size()); ++si) {
        Cell c;
        c.env_idx = ei;
        c.agent_idx = ai;
        c.seed_idx = si;
        c.env_id = envs[ei].name();
        c.agent_id = agent_ids[ai];
        c.seed = cfg.seeds[si];
        c.run_id = c.env_id + "__" + c.agent_id + "__s" + std::to_string(c.seed);
        cells.push_back(std::move(c));
      }

  std::vector<CellOutput> outputs(cells.size());
  const int jobs = resolve_jobs(cfg.jobs);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
#endif
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(cells.size()); ++i) {
    const Cell& c = cells[i];
    try {
      outputs[i] = run_cell(envs[c.env_idx], cfg.agents[c.agent_idx], cfg, c.seed);
    } catch (const std::exception& e) {
      outputs[i].ok = false;
      outputs[i].error = e.what();
    }
  }
  (void)jobs;

  for (size_t i = 0; i < cells.size(); ++i)
    if (!outputs[i].ok) {
      oc.exit_code = 2;
      oc.error = "cell " + cells[i].run_id + ": " + outputs[i].error;
      return oc;
    }

  // runs.csv in canonical cell order
  std::ostringstream csv;
  csv << "run_id,env_id,agent,seed,K_budget,checkpoint_k,cum_regret,epochs,"
         "refreshes,optimism_violations,wall_ms\n";
  for (size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    for (const CheckpointRow& r : outputs[i].rows)
      csv << c.run_id << "," << c.env_id << "," << c.agent_id << "," << c.seed << ","
          << cfg.episodes << "," << r.k << "," << csv_num(r.cum_regret) << ","
          << r.epochs << "," << r.refreshes << "," << r.optimism_violations << ","
          << csv_num(cfg.record_wall_ms ? outputs[i].wall_ms : 0.0) << "\n";
  }

  json audits;
  audits["version"] = "regret-lab-audits/1";
  audits["cells"] = json::array();
  bool all_pass = true;
  for (size_t i = 0; i < cells.size(); ++i) {
    const Cell& c = cells[i];
    audits["cells"].push_back(json{{"run_id", c.run_id},
                                   {"env_id", c.env_id},
                                   {"agent", c.agent_id},
                                   {"seed", c.seed},
                                   {"payload", outputs[i].audit_payload},
                                   {"result", outputs[i].audit_result}});
    all_pass = all_pass && outputs[i].audit_pass;
  }
  audits["all_pass"] = all_pass;
  oc.audits_pass = all_pass;

  try {
    const std::string runs_s = csv.str();
    const std::string audits_s = audits.dump(2) + "\n";
    const std::string config_s = cfg.raw.dump(2) + "\n";
    write_file(fs::path(out_dir) / "runs.csv", runs_s);
    write_file(fs::path(out_dir) / "audits.json", audits_s);
    write_file(fs::path(out_dir) / "config.json", config_s);

    // content hash over (name, bytes) of the payload files, in name order
    std::uint64_t h = 1469598103934665603ull;
    const std::map<std::string, const std::string*> files = {
        {"audits.json", &audits_s}, {"config.json", &config_s}, {"runs.csv", &runs_s}};
    for (const auto& [name, body] : files) {
      h = fnv1a64(name) ^ h;
      for (unsigned char ch : *body) {
        h ^= ch;
        h *= 1099511628211ull;
      }
    }
    oc.content_hash = h;

    json manifest;
    manifest["tool"] = "regretlab";
    manifest["version"] = kToolVersion;
    manifest["config_hash"] = hash_hex(oc.config_hash);
    manifest["content_hash"] = hash_hex(oc.content_hash);
    manifest["n_cells"] = cells.size();
    manifest["episodes"] = cfg.episodes;
    manifest["backend"] = cfg.backend;
    manifest["warnings"] = oc.warnings;
    write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    oc.exit_code = 2;
    oc.error = e.what();
    return oc;
  }

  oc.exit_code = all_pass ? 0 : 3;
  return oc;
}

// ---------------------------------------------------------------------------
// report + audit verbs

namespace {

struct RunsRow {
  std::string run_id, env_id, agent;
  std::uint64_t seed = 0, K = 0, k = 0;
  double cum_regret = 0.0;
};

std::vector<RunsRow> read_runs_csv(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw std::runtime_error("cannot open " + p.string());
  std::vector<RunsRow> rows;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty runs.csv");
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (cols.size() < 11) throw std::runtime_error("short row in runs.csv");
    RunsRow r;
    r.run_id = cols[0];
    r.env_id = cols[1];
    r.agent = cols[2];
    r.seed = std::stoull(cols[3]);
    r.K = std::stoull(cols[4]);
    r.k = std::stoull(cols[5]);
    r.cum_regret = std::stod(cols[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0.0;
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + (v[hi] - v[lo]) * frac;
}

}  // namespace

int write_report(const std::string& run_dir, std::uint64_t fit_min_checkpoint) {
  std::vector<RunsRow> rows;
  try {
    rows = read_runs_csv(fs::path(run_dir) / "runs.csv");
  } catch (const std::exception&) {
    return 2;
  }

  // (env, agent) -> checkpoint -> per-seed regrets; map keys give canonical order
  std::map<std::pair<std::string, std::string>,
           std::map<std::uint64_t, std::vector<double>>> groups;
  for (const auto& r : rows) groups[{r.env_id, r.agent}][r.k].push_back(r.cum_regret);

  std::ostringstream rep;
  rep << "env_id,agent,checkpoint_k,n_seeds,mean_regret,p10_regret,p90_regret\n";
  std::ostringstream fits;
  fits << "env_id,agent,slope,intercept,stderr_slope,n_points,window_lo,window_hi\n";

  for (const auto& [key, by_k] : groups) {
    std::vector<std::uint64_t> cps;
    std::vector<std::vector<double>> curves;  // rebuilt below as per-seed rows
    size_t n_seeds = 0;
    for (const auto& [k, vals] : by_k) n_seeds = std::max(n_seeds, vals.size());
    for (const auto& [k, vals] : by_k) {
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      rep << key.first << "," << key.second << "," << k << "," << vals.size() << ","
          << csv_num(mean) << "," << csv_num(quantile(vals, 0.1)) << ","
          << csv_num(quantile(vals, 0.9)) << "\n";
      cps.push_back(k);
    }
    // per-seed curves aligned on checkpoints (seed order as encountered)
    if (!by_k.empty()) {
      const size_t n_cp = by_k.size();
      curves.assign(n_seeds, std::vector<double>(n_cp, 0.0));
      size_t ci = 0;
      bool rect = true;
      for (const auto& [k, vals] : by_k) {
        if (vals.size() != n_seeds) rect = false;
        for (size_t si = 0; si < vals.size() && si < n_seeds; ++si)
          curves[si][ci] = vals[si];
        ++ci;
      }
      if (rect) {
        const FitResult fit = fit_scaling(curves, cps, fit_min_checkpoint);
        if (fit.ok)
          fits << key.first << "," << key.second << "," << csv_num(fit.slope) << ","
               << csv_num(fit.intercept) << "," << csv_num(fit.stderr_slope) << ","
               << fit.n_points << "," << fit.window_lo << "," << fit.window_hi << "\n";
      }
    }
  }

  try {
    write_file(fs::path(run_dir) / "report.csv", rep.str());
    write_file(fs::path(run_dir) / "fits.csv", fits.str());
  } catch (const std::exception&) {
    return 2;
  }
  return 0;
}

int audit_dir(const std::string& run_dir, std::string* summary_out) {
  json audits;
  try {
    std::ifstream f(fs::path(run_dir) / "audits.json");
    if (!f) return 2;
    f >> audits;
  } catch (const std::exception&) {
    return 2;
  }

  bool all_pass = true;
  std::ostringstream os;
  for (const auto& cell : audits.at("cells")) {
    const AuditResult res = audit_payload(cell.at("payload"));
    const bool p = res.pass();
    all_pass = all_pass && p;
    os << (p ? "[ ok ] " : "[FAIL] ") << cell.at("run_id").get<std::string>() << "\n";
    if (!p)
      for (const auto& c : res.checks)
        if (c.applicable && !c.pass)
          os << "        " << c.name << ": " << c.detail << "\n";
  }
  if (summary_out) *summary_out = os.str();
  return all_pass ? 0 : 3;
}

}  // namespace regretlab
