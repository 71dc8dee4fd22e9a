#pragma once

#include <cstdint>
#include <vector>

#include "regretlab/mdp.hpp"

namespace regretlab {

// Exact finite-horizon planning. Backward induction over layers; within a
// layer every state is independent, so the sweep is exposed both as a plain
// serial loop (reference) and as an OpenMP kernel. The two are bit-identical
// by construction -- no reductions, disjoint writes -- which the tests pin.
//
// Values are accumulated in long double internally and exported as double.
// On x86-64 this makes short integer/decimal folds exact (the reference
// planner should not be the noisiest part of a regret measurement); where
// long double is plain double it degrades harmlessly.

enum class Exec { serial, parallel };

struct PlanResult {
  ValueTable vt;
  Policy pi;  // greedy, lowest action index on ties
};

// optimal values + greedy policy via backward induction
PlanResult bellman_optimal(const TabularMdp& m, Exec ex = Exec::parallel);

// value of a fixed deterministic policy
ValueTable policy_eval(const TabularMdp& m, const Policy& pi, Exec ex = Exec::parallel);

// value of the uniform-random policy (action-averaged backup)
ValueTable uniform_policy_eval(const TabularMdp& m, Exec ex = Exec::parallel);

// exact optimum by enumerating all A^(S*H) deterministic policies and taking
// elementwise maxima; throws when the count exceeds policy_cap
PlanResult brute_force_plan(const TabularMdp& m, std::uint64_t policy_cap = 1000000);

// number of deterministic policies, or nullopt on overflow past cap
bool brute_force_feasible(const TabularMdp& m, std::uint64_t policy_cap,
                          std::uint64_t* count_out = nullptr);

namespace detail {
// backward induction on raw arrays with externally supplied per-(h,s,a) mean
// rewards, no validation and no support constraints. Needed by diagnostics
// whose auxiliary rewards legitimately exceed H.
void raw_bellman_optimal(int S, int A, int H, const std::vector<double>& P,
                         const std::vector<double>& r_mean, ValueTable& vt_out,
                         Policy* pi_out, Exec ex);
}  // namespace detail

}  // namespace regretlab
