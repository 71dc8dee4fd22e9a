#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "regretlab/mdp.hpp"
#include "regretlab/simulate.hpp"

namespace regretlab {

// mean optimal value at the start distribution, <mu, V*_1>; reward mode only
double compute_v_star(const TabularMdp& m);

// mean optimal cost at the start distribution; cost mode only (stored values
// are negated costs, so this is -<mu, V*_1>)
double compute_c_star(const TabularMdp& m);

// maximal expected sum of per-step value variances plus reward variances
// under the optimal values: an auxiliary DP whose rewards are
// Var(P_{h,s,a}, V*_{h+1}) + Var(R_{h,s,a}); reward mode only
double compute_var1(const TabularMdp& m);

// max over deterministic policies and start states of the conditional return
// variance Var[sum r | s_1 = s], by enumeration with a law-of-total-variance
// recursion per policy; nullopt when A^(S*H) exceeds the cap (no polynomial
// algorithm is known for this quantity)
std::optional<double> compute_var2_oracle(const TabularMdp& m,
                                          std::uint64_t policy_cap = 1000000);

// per-start-state conditional return variances sigma^2_1(s) of a fixed policy
std::vector<double> policy_start_variances(const TabularMdp& m, const Policy& pi);

// return variance of one fixed deterministic policy with s_1 ~ mu (exact)
double policy_return_variance(const TabularMdp& m, const Policy& pi);

// batch profile: 0 before the first sample, else floor(log2 n) + 1
int profile_index(std::uint64_t n_all);

struct AuditCheck {
  std::string name;
  bool applicable = true;
  bool pass = true;
  std::string detail;
};

struct AuditResult {
  std::vector<AuditCheck> checks;
  bool pass() const {
    for (const auto& c : checks)
      if (c.applicable && !c.pass) return false;
    return true;
  }
  nlohmann::json to_json() const;
};

// post-run audit: optimism violation count, refresh-count and visit-ratio
// doubling bounds, profile consistency of the refresh log, ledger sanity and
// the trivial H*K regret bound
AuditResult audit_run(const TabularMdp& env, const RunResult& run);

// re-evaluate a recorded audit payload (as written into audits.json) against
// the same bounds; used by the audit CLI verb
AuditResult audit_payload(const nlohmann::json& payload);

struct FitResult {
  bool ok = false;
  double slope = 0.0;
  double intercept = 0.0;      // in log2 space
  double stderr_slope = 0.0;
  int n_points = 0;
  std::uint64_t window_lo = 0, window_hi = 0;
};

// least squares of log2(mean cumulative regret) on log2(k) over checkpoints
// >= min_checkpoint; curves are per-seed cumulative regret values aligned
// with `checkpoints`. Checkpoints with nonpositive mean regret are skipped.
FitResult fit_scaling(const std::vector<std::vector<double>>& curves,
                      const std::vector<std::uint64_t>& checkpoints,
                      std::uint64_t min_checkpoint = 128);

}  // namespace regretlab
