#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "regretlab/agents.hpp"
#include "regretlab/mdp.hpp"
#include "regretlab/planner.hpp"

namespace regretlab {

// Sampling backends. Both consume the same keyed per-(h,s,a) streams derived
// from the run seed, so a run produces the identical sample sequence whether
// draws happen on demand or out of pre-drawn banks -- the bank view is the
// "expanded MDP" picture where each tuple owns a fixed list of future
// next-states that are revealed in order.

class SampleBackend {
 public:
  virtual ~SampleBackend() = default;
  virtual std::string name() const = 0;
  virtual int init_state() = 0;  // consumes the next episode-start draw
  virtual double reward(int h, int s, int a) = 0;
  virtual int next_state(int h, int s, int a) = 0;
};

class OnDemandBackend : public SampleBackend {
 public:
  OnDemandBackend(const TabularMdp& env, std::uint64_t run_seed);
  std::string name() const override { return "ondemand"; }
  int init_state() override;
  double reward(int h, int s, int a) override;
  int next_state(int h, int s, int a) override;

 private:
  RandomStream& stream(std::vector<std::unique_ptr<RandomStream>>& pool,
                       StreamPurpose purpose, int h, int s, int a);
  const TabularMdp* env_;
  std::uint64_t seed_;
  RandomStream init_stream_;
  std::vector<std::unique_ptr<RandomStream>> trans_, rew_;  // lazily created
};

// pre-draws a bank of `capacity` samples per touched tuple and replays it;
// drawing past the bank throws. Banks materialize lazily per tuple, which is
// observationally identical to drawing them all upfront since streams are
// independent.
class ExpandedBackend : public SampleBackend {
 public:
  ExpandedBackend(const TabularMdp& env, std::uint64_t run_seed, std::uint64_t capacity);
  std::string name() const override { return "expanded"; }
  int init_state() override;
  double reward(int h, int s, int a) override;
  int next_state(int h, int s, int a) override;

 private:
  struct Bank {
    std::vector<int> next;
    std::vector<double> rew_u;  // uniforms, only for draw-consuming specs
    std::uint64_t next_cur = 0, rew_cur = 0;
    bool filled = false;
  };
  Bank& bank(int h, int s, int a);
  const TabularMdp* env_;
  std::uint64_t seed_, cap_;
  RandomStream init_stream_;
  std::vector<Bank> banks_;
};

std::unique_ptr<SampleBackend> make_backend(const std::string& name,
                                            const TabularMdp& env,
                                            std::uint64_t run_seed, std::uint64_t K);

struct StepRecord {
  int h, s, a, s_next;
  double r;
};

struct EpisodeTrajectory {
  std::uint64_t k = 0;
  std::uint64_t policy_epoch = 0;
  std::vector<StepRecord> steps;
  double reward_sum = 0.0;
};

// per-episode regret increments and their running sum; increments are exact
// policy-evaluation gaps, clamped at 0 against sub-ulp planner noise
struct RegretLedger {
  std::vector<double> increments;
  double cum = 0.0;

  void add(double gap) {
    if (gap < 0.0) gap = 0.0;
    increments.push_back(gap);
    cum += gap;
  }
};

struct RunOptions {
  std::uint64_t K = 0;
  std::vector<std::uint64_t> checkpoints;  // empty: powers of two up to K
  std::string backend = "ondemand";
  bool record_trajectories = false;
  bool record_epoch_policies = false;  // needed by pac_extract
  bool record_wall_ms = false;         // off by default: keeps output bytes
                                       // a pure function of (config, seed)
  bool audit = true;
};

struct CheckpointRow {
  std::uint64_t k = 0;
  double cum_regret = 0.0;
  std::uint64_t epochs = 0, refreshes = 0, optimism_violations = 0;
};

struct EpochPolicyRecord {
  std::uint64_t first_episode;
  std::uint64_t epoch;
  Policy pi;
  double v_pi_start_mean;  // <mu, V^pi_1>
};

struct RunResult {
  std::uint64_t K = 0, seed = 0;
  std::string backend;
  RegretLedger ledger;
  std::vector<CheckpointRow> checkpoints;
  std::uint64_t epochs = 0;          // distinct policy epochs seen
  std::uint64_t refreshes = 0;       // total refresh events (mvp)
  std::uint64_t optimism_violations = 0;
  double bonus_sum = 0.0;            // sum of active bonuses over visited steps
  double inv_count_sum = 0.0;        // sum of 1/max(N,1) over visited steps
  std::uint64_t traj_hash = 0;       // fnv over the step stream
  double wall_ms = 0.0;
  std::vector<EpisodeTrajectory> trajectories;
  std::vector<EpochPolicyRecord> epoch_policies;
  nlohmann::json agent_snapshot;
  // planner references the run was scored against
  double v_star_start_mean = 0.0;  // <mu, V*_1>
};

std::vector<std::uint64_t> default_checkpoints(std::uint64_t K);

RunResult run_online(const TabularMdp& env, Agent& agent, SampleBackend& backend,
                     const RunOptions& opts);

// convenience: build agent + backend from specs and run
RunResult run_online(const TabularMdp& env, const nlohmann::json& agent_spec,
                     std::uint64_t seed, const RunOptions& opts);

struct PacSample {
  std::uint64_t k = 0;
  double suboptimality = 0.0;  // <mu, V*_1 - V^{pi_k}_1>
};

// uniform episode index -> the policy in force during it; requires the run to
// have recorded epoch policies
PacSample pac_extract(const RunResult& run, const TabularMdp& env, std::uint64_t seed);

}  // namespace regretlab
