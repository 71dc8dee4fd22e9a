#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "regretlab/sweep.hpp"

using namespace regretlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json base_config() {
  return json{
      {"version", kConfigSchemaVersion},
      {"envs", json::array({json{{"family", "jao"}, {"params", {{"H", 6}}}}})},
      {"agents", json::array({json{{"name", "mvp"}, {"delta", 0.1}},
                              json{{"name", "oracle"}}})},
      {"episodes", 32},
      {"seeds", json::array({1, 2})},
      {"backend", "ondemand"},
      {"checkpoints", "pow2"}};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const char* stem) {
  const fs::path d = fs::temp_directory_path() / (std::string("regretlab_sw_") + stem);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_SUITE("sweep") {

TEST_CASE("config parsing accepts the documented shapes") {
  const ExperimentConfig cfg = ExperimentConfig::from_json(base_config());
  CHECK(cfg.envs.size() == 1);
  CHECK(cfg.agents.size() == 2);
  CHECK(cfg.episodes == 32);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2});
  CHECK(cfg.backend == "ondemand");
  CHECK(cfg.checkpoint_list.empty());  // pow2 keyword

  json one_env = base_config();
  one_env.erase("envs");
  one_env["env"] = json{{"family", "jao"}, {"params", {{"H", 6}}}};
  CHECK(ExperimentConfig::from_json(one_env).envs.size() == 1);

  json listed = base_config();
  listed["checkpoints"] = json::array({4, 16, 32});
  CHECK(ExperimentConfig::from_json(listed).checkpoint_list ==
        std::vector<std::uint64_t>{4, 16, 32});
}

TEST_CASE("config parsing rejects malformed input") {
  json no_envs = base_config();
  no_envs.erase("envs");
  CHECK_THROWS_AS(ExperimentConfig::from_json(no_envs), std::invalid_argument);

  json no_agents = base_config();
  no_agents["agents"] = json::array();
  CHECK_THROWS_AS(ExperimentConfig::from_json(no_agents), std::invalid_argument);

  json nameless = base_config();
  nameless["agents"] = json::array({json{{"delta", 0.1}}});
  CHECK_THROWS_AS(ExperimentConfig::from_json(nameless), std::invalid_argument);

  json zero_eps = base_config();
  zero_eps["episodes"] = 0;
  CHECK_THROWS_AS(ExperimentConfig::from_json(zero_eps), std::invalid_argument);

  json dup_seeds = base_config();
  dup_seeds["seeds"] = json::array({3, 3});
  CHECK_THROWS_AS(ExperimentConfig::from_json(dup_seeds), std::invalid_argument);

  json bad_backend = base_config();
  bad_backend["backend"] = "tape";
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad_backend), std::invalid_argument);

  json bad_cp = base_config();
  bad_cp["checkpoints"] = json::array({64});  // past episodes=32
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad_cp), std::invalid_argument);

  json bad_ver = base_config();
  bad_ver["version"] = "regret-lab-config/9";
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad_ver), std::invalid_argument);
}

TEST_CASE("master seed expansion derives distinct replication seeds") {
  json j = base_config();
  j["seeds"] = json{{"master_seed", 99}, {"replications", 8}};
  const ExperimentConfig cfg = ExperimentConfig::from_json(j);
  REQUIRE(cfg.seeds.size() == 8);
  for (size_t i = 0; i < 8; ++i)
    for (size_t k = i + 1; k < 8; ++k) CHECK(cfg.seeds[i] != cfg.seeds[k]);
  // derivation is stable
  const ExperimentConfig cfg2 = ExperimentConfig::from_json(j);
  CHECK(cfg.seeds == cfg2.seeds);
}

TEST_CASE("config hash ignores formatting but tracks semantics") {
  const json a = base_config();
  json b = base_config();  // same object, key insertion order differs
  b.erase("episodes");
  b["episodes"] = 32;
  CHECK(config_hash(a) == config_hash(b));

  // whitespace in the source text is irrelevant: hash the parsed object
  const std::string pretty = a.dump(4);
  CHECK(config_hash(json::parse(pretty)) == config_hash(a));

  json c = base_config();
  c["episodes"] = 64;
  CHECK(config_hash(c) != config_hash(a));
  json d = base_config();
  d["seeds"] = json::array({1, 3});
  CHECK(config_hash(d) != config_hash(a));
}

TEST_CASE("csv numbers survive a parse round trip") {
  for (double x : {0.0, 0.8, 1.0 / 3.0, 3.840020576131687, 1e-12, 98304.0}) {
    const std::string s = csv_num(x);
    CHECK(std::stod(s) == x);
  }
}

TEST_CASE("sweep writes the pinned artifact set deterministically") {
  const ExperimentConfig cfg = ExperimentConfig::from_json(base_config());
  const fs::path d1 = fresh_dir("a"), d2 = fresh_dir("b");

  const SweepOutcome o1 = run_sweep(cfg, d1.string());
  REQUIRE(o1.exit_code == 0);
  CHECK(o1.audits_pass);
  for (const char* f : {"runs.csv", "audits.json", "config.json", "manifest.json"})
    CHECK(fs::exists(d1 / f));

  // header is part of the external interface
  std::ifstream runs(d1 / "runs.csv");
  std::string header;
  std::getline(runs, header);
  CHECK(header ==
        "run_id,env_id,agent,seed,K_budget,checkpoint_k,cum_regret,epochs,refreshes,"
        "optimism_violations,wall_ms");

  // canonical (env, agent, seed) cell order: mvp seeds 1,2 then oracle 1,2
  std::string line;
  std::getline(runs, line);
  CHECK(line.substr(0, line.find(',')) == "jao-H6-A2-c4__mvp__s1");

  const SweepOutcome o2 = run_sweep(cfg, d2.string());
  CHECK(o1.content_hash == o2.content_hash);
  CHECK(o1.config_hash == o2.config_hash);
  for (const char* f : {"runs.csv", "audits.json", "config.json"})
    CHECK(slurp(d1 / f) == slurp(d2 / f));

  const json manifest = json::parse(slurp(d1 / "manifest.json"));
  CHECK(manifest.at("tool") == "regretlab");
  CHECK(manifest.at("version") == kToolVersion);
  CHECK(manifest.at("n_cells") == 4);
  CHECK(manifest.at("config_hash") == hash_hex(o1.config_hash));

  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("parallel and serial sweeps write identical bytes") {
  json j = base_config();
  j["seeds"] = json::array({1, 2, 3, 4, 5});
  const fs::path d1 = fresh_dir("j1"), d4 = fresh_dir("j4");

  ExperimentConfig cfg1 = ExperimentConfig::from_json(j);
  cfg1.jobs = 1;
  ExperimentConfig cfg4 = ExperimentConfig::from_json(j);
  cfg4.jobs = 4;
  const SweepOutcome o1 = run_sweep(cfg1, d1.string());
  const SweepOutcome o4 = run_sweep(cfg4, d4.string());
  REQUIRE(o1.exit_code == 0);
  REQUIRE(o4.exit_code == 0);
  CHECK(slurp(d1 / "runs.csv") == slurp(d4 / "runs.csv"));
  CHECK(slurp(d1 / "audits.json") == slurp(d4 / "audits.json"));
  CHECK(o1.content_hash == o4.content_hash);
  fs::remove_all(d1);
  fs::remove_all(d4);
}

TEST_CASE("non-power-of-two budgets run with a recorded warning") {
  json j = base_config();
  j["episodes"] = 24;
  const fs::path d = fresh_dir("warn");
  const SweepOutcome o = run_sweep(ExperimentConfig::from_json(j), d.string());
  CHECK(o.exit_code == 0);
  REQUIRE_FALSE(o.warnings.empty());
  CHECK(o.warnings.front().find("not a power of two") != std::string::npos);
  const json manifest = json::parse(slurp(d / "manifest.json"));
  CHECK_FALSE(manifest.at("warnings").empty());
  fs::remove_all(d);
}

TEST_CASE("broken env specs exit 2 before any cell runs") {
  json j = base_config();
  j["envs"] = json::array({json{{"family", "jao"}, {"params", {{"H", 2}}}}});  // H too small
  const fs::path d = fresh_dir("bad");
  const SweepOutcome o = run_sweep(ExperimentConfig::from_json(j), d.string());
  CHECK(o.exit_code == 2);
  CHECK_FALSE(o.error.empty());
  CHECK_FALSE(fs::exists(d / "runs.csv"));
  fs::remove_all(d);
}

TEST_CASE("report and fits aggregate the runs table") {
  json j = base_config();
  j["episodes"] = 256;
  j["seeds"] = json::array({1, 2, 3});
  j["agents"] = json::array({json{{"name", "random"}}});
  const fs::path d = fresh_dir("rep");
  REQUIRE(run_sweep(ExperimentConfig::from_json(j), d.string()).exit_code == 0);
  REQUIRE(write_report(d.string(), 32) == 0);

  std::ifstream rep(d / "report.csv");
  std::string header;
  std::getline(rep, header);
  CHECK(header == "env_id,agent,checkpoint_k,n_seeds,mean_regret,p10_regret,p90_regret");
  int rows = 0;
  std::string line;
  std::vector<std::string> kept;
  while (std::getline(rep, line))
    if (!line.empty()) {
      ++rows;
      kept.push_back(line);
    }
  CHECK(rows == 9);  // checkpoints 1..256 = 9 per (env, agent)
  for (const auto& l : kept) CHECK(l.find(",3,") != std::string::npos);  // n_seeds

  std::ifstream fits(d / "fits.csv");
  std::getline(fits, header);
  CHECK(header == "env_id,agent,slope,intercept,stderr_slope,n_points,window_lo,window_hi");
  std::getline(fits, line);
  // random baseline accrues regret linearly; short runs leave some noise
  const auto c1 = line.find(',', line.find(',') + 1);
  const double slope = std::stod(line.substr(c1 + 1));
  CHECK(slope > 0.8);
  CHECK(slope < 1.2);

  CHECK(write_report((d / "missing").string(), 32) == 2);
  fs::remove_all(d);
}

TEST_CASE("audit_dir re-checks recorded payloads") {
  const fs::path d = fresh_dir("aud");
  REQUIRE(run_sweep(ExperimentConfig::from_json(base_config()), d.string()).exit_code ==
          0);
  std::string summary;
  CHECK(audit_dir(d.string(), &summary) == 0);
  CHECK(summary.find("[ ok ]") != std::string::npos);
  CHECK(summary.find("[FAIL]") == std::string::npos);

  // tamper with a recorded payload: the re-audit must catch it
  json audits = json::parse(slurp(d / "audits.json"));
  audits["cells"][0]["payload"]["cum_regret"] = 1e9;
  {
    std::ofstream f(d / "audits.json");
    f << audits.dump(2) << "\n";
  }
  CHECK(audit_dir(d.string(), &summary) == 3);
  CHECK(summary.find("[FAIL]") != std::string::npos);

  CHECK(audit_dir((d / "nothing").string(), &summary) == 2);
  fs::remove_all(d);
}

}  // TEST_SUITE
