#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "regretlab/mdp.hpp"

namespace regretlab {

inline constexpr const char* kConfigSchemaVersion = "regret-lab-config/1";
inline constexpr const char* kToolVersion = "0.1.0";

std::uint64_t fnv1a64(const void* data, std::size_t n);
std::uint64_t fnv1a64(const std::string& s);
std::string hash_hex(std::uint64_t h);

// hash of the canonical (sorted-key, no-whitespace) dump; insensitive to key
// order and formatting of the source file
std::uint64_t config_hash(const nlohmann::json& config);

struct ExperimentConfig {
  std::vector<nlohmann::json> envs;    // generator or file specs
  std::vector<nlohmann::json> agents;  // agent specs
  std::uint64_t episodes = 1024;
  std::vector<std::uint64_t> seeds;
  std::vector<std::uint64_t> checkpoint_list;  // empty -> powers of two
  std::string backend = "ondemand";
  bool record_wall_ms = false;
  int jobs = 0;  // 0: REGRETLAB_JOBS env var, else OpenMP default
  nlohmann::json raw;  // the config as given (canonical source for hashing)

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
};

struct SweepOutcome {
  int exit_code = 0;  // 0 ok, 2 config/env error, 3 audit failure
  std::string error;
  bool audits_pass = true;
  std::string out_dir;
  std::uint64_t config_hash = 0, content_hash = 0;
  std::vector<std::string> warnings;
};

// runs envs x agents x seeds, writes runs.csv, audits.json, config.json and
// manifest.json into out_dir (created if needed). Cells execute in parallel;
// outputs are written in the canonical (env, agent, seed) order regardless.
SweepOutcome run_sweep(const ExperimentConfig& cfg, const std::string& out_dir);

// aggregates runs.csv into report.csv (per env/agent/checkpoint: mean, p10,
// p90 across seeds) and fits.csv (log2-log2 slope per env/agent); returns 0,
// or 2 when the directory has no readable runs.csv
int write_report(const std::string& run_dir, std::uint64_t fit_min_checkpoint = 128);

// re-evaluates audits.json bounds; 0 when all pass, 3 otherwise, 2 on missing
// or unreadable input
int audit_dir(const std::string& run_dir, std::string* summary_out = nullptr);

// csv cell formatting used everywhere: shortest round-trip doubles
std::string csv_num(double x);

}  // namespace regretlab
