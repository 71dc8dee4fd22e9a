#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "regretlab/mdp.hpp"
#include "regretlab/planner.hpp"
#include "regretlab/rng.hpp"

namespace regretlab {

// Bonus configuration. The defaults are the constants the analysis needs;
// delta_prime folds the union bound over (S, A, H, K) into the confidence
// level and L = ln(1/delta_prime) is the log term every bonus uses.
struct BonusParams {
  double c1 = 460.0 / 9.0;
  double c2 = 2.0 * std::sqrt(2.0);
  double c3 = 544.0 / 9.0;  // == 400/9 + 16, exactly, in binary64
  double delta = 0.1;
  double delta_prime = 0.0;
  double log_term = 0.0;

  static BonusParams make(double delta, int S, int A, int H, std::uint64_t K);
  void finalize(int S, int A, int H, std::uint64_t K);
};

// variance of v under distribution p: <p, v^2> - <p, v>^2, clamped at 0
double dist_variance(const double* p, const double* v, int n);

// b = c1 sqrt(Var(phat, v_next) L / n) + c2 sqrt(max(sigma - r^2, 0) L / n)
//   + c3 H L / n,   with n = max(N, 1)
double mvp_bonus(const BonusParams& bp, const double* phat, const double* v_next,
                 int n_states, double sigma_hat, double r_hat, std::uint64_t N, int H);

// f(p, v, n) = <p,v> + max{ (20/3) sqrt(Var(p,v) L / n), (400/9) H L / n };
// entrywise non-decreasing in v, which is what lets optimism propagate
// backward through clipped backups
double f_helper(const double* p, const double* v, int n_states, double n, double L, int H);

enum class PolicyKind { deterministic, uniform_random };

class Agent {
 public:
  virtual ~Agent() = default;
  virtual std::string name() const = 0;
  virtual PolicyKind policy_kind() const { return PolicyKind::deterministic; }
  virtual void begin_episode(std::uint64_t /*k*/) {}
  virtual int act(int h, int s) = 0;
  virtual void observe(int /*h*/, int /*s*/, int /*a*/, double /*r*/, int /*s_next*/) {}
  virtual void end_episode() {}
  // increments whenever the acting policy may have changed; the regret ledger
  // re-evaluates the policy only on epoch change
  virtual std::uint64_t policy_epoch() const { return 0; }
  virtual Policy greedy_policy() const = 0;
  // value tables for optimism audits; null for agents without them
  virtual const ValueTable* q_table() const { return nullptr; }
  virtual nlohmann::json snapshot() const;
};

struct RefreshEvent {
  std::uint64_t k;  // episode in which the trigger fired
  int h, s, a;
  std::uint64_t n_all;  // lifetime count at the trigger (a power of two)
};

// Model-based optimistic agent with doubling-epoch refreshes: per (h,s,a) the
// empirical model is rebuilt each time the lifetime visit count crosses a
// power of two, from the second half of the samples only (batch accumulators
// are zeroed at each refresh). Refreshes happen inline mid-episode; the value
// backup runs once at episode end if anything triggered.
class MvpAgent : public Agent {
 public:
  MvpAgent(int S, int A, int H, RewardMode mode, const BonusParams& params,
           Exec ex = Exec::parallel);

  std::string name() const override { return "mvp"; }
  void begin_episode(std::uint64_t k) override { episode_ = k; }
  int act(int h, int s) override;
  void observe(int h, int s, int a, double r, int s_next) override;
  void end_episode() override;
  std::uint64_t policy_epoch() const override { return epoch_; }
  Policy greedy_policy() const override;
  const ValueTable* q_table() const override { return &tables_; }
  nlohmann::json snapshot() const override;

  // the value backup; public so it can be exercised directly. Calling it
  // without a pending trigger is a no-op that bumps a warning counter.
  void backup();

  // introspection (audits, tests)
  std::uint64_t n_all(int h, int s, int a) const { return n_all_[idx(h, s, a)]; }
  std::uint64_t batch_fill(int h, int s, int a) const { return n_batch_[idx(h, s, a)]; }
  // batch size N of the model in use; 1 when the tuple was never visited
  std::uint64_t model_n(int h, int s, int a) const {
    const std::uint64_t n = model_n_[idx(h, s, a)];
    return n == 0 ? 1 : n;
  }
  std::uint32_t refresh_count(int h, int s, int a) const {
    return refresh_count_[idx(h, s, a)];
  }
  double bonus_at(int h, int s, int a) const { return bonus_[idx(h, s, a)]; }
  bool triggered() const { return triggered_; }
  const std::vector<RefreshEvent>& refresh_log() const { return refresh_log_; }
  std::uint64_t backup_warn_count() const { return backup_warn_count_; }
  const BonusParams& params() const { return params_; }

  int S, A, H;
  RewardMode mode;

 private:
  size_t idx(int h, int s, int a) const {
    return (static_cast<size_t>(h - 1) * S + s) * A + a;
  }
  void refresh(std::uint64_t t, int h, int s, int a);

  BonusParams params_;
  Exec ex_;
  std::uint64_t episode_ = 0;
  std::uint64_t epoch_ = 0;
  bool triggered_ = false;

  // batch accumulators (since last refresh)
  std::vector<std::uint64_t> n_all_, n_batch_;
  std::vector<double> theta_, kappa_;          // sum r, sum r^2
  std::vector<std::uint64_t> trans_batch_;     // next-state counts, x S

  // model in use (rebuilt at refresh)
  std::vector<std::uint64_t> model_n_;
  std::vector<double> r_hat_, sigma_hat_;
  std::vector<double> p_hat_;                  // x S

  ValueTable tables_;
  std::vector<double> bonus_;
  std::vector<std::uint32_t> refresh_count_;
  std::vector<RefreshEvent> refresh_log_;
  std::uint64_t backup_warn_count_ = 0;
};

// Hoeffding-bonus baseline: all-samples empirical model, b = H sqrt(L/max(N,1)),
// full recompute every episode.
class UcbviAgent : public Agent {
 public:
  UcbviAgent(int S, int A, int H, RewardMode mode, const BonusParams& params,
             Exec ex = Exec::parallel);

  std::string name() const override { return "ucbvi"; }
  int act(int h, int s) override;
  void observe(int h, int s, int a, double r, int s_next) override;
  void end_episode() override;
  std::uint64_t policy_epoch() const override { return epoch_; }
  Policy greedy_policy() const override;
  const ValueTable* q_table() const override { return &tables_; }
  nlohmann::json snapshot() const override;

  int S, A, H;
  RewardMode mode;

 private:
  size_t idx(int h, int s, int a) const {
    return (static_cast<size_t>(h - 1) * S + s) * A + a;
  }

  BonusParams params_;
  Exec ex_;
  std::uint64_t epoch_ = 0;
  std::vector<std::uint64_t> n_all_;
  std::vector<double> sum_r_;
  std::vector<std::uint64_t> trans_counts_;  // x S
  ValueTable tables_;
};

class RandomAgent : public Agent {
 public:
  RandomAgent(int A, int H, int S, std::uint64_t action_seed);
  std::string name() const override { return "random"; }
  PolicyKind policy_kind() const override { return PolicyKind::uniform_random; }
  int act(int h, int s) override;
  Policy greedy_policy() const override;  // throws: no deterministic policy
  nlohmann::json snapshot() const override;

 private:
  int A_, H_, S_;
  RandomStream stream_;
};

class OracleAgent : public Agent {
 public:
  explicit OracleAgent(const TabularMdp& env);
  std::string name() const override { return "oracle"; }
  int act(int h, int s) override { return pi_.at(h, s); }
  Policy greedy_policy() const override { return pi_; }
  nlohmann::json snapshot() const override;

 private:
  Policy pi_;
};

// spec: {"name": "mvp"|"ucbvi"|"random"|"oracle", "delta": ..., optional
// "c1"/"c2"/"c3" overrides}. K and run_seed pin the confidence level and the
// random agent's action stream.
std::unique_ptr<Agent> make_agent(const nlohmann::json& spec, const TabularMdp& env,
                                  std::uint64_t K, std::uint64_t run_seed,
                                  Exec ex = Exec::parallel);

std::string agent_spec_id(const nlohmann::json& spec);

}  // namespace regretlab
