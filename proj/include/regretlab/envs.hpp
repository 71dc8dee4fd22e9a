#pragma once

#include <cstdint>

#include <json.hpp>

#include "regretlab/mdp.hpp"

namespace regretlab {

// Instance generators. All are deterministic functions of their arguments
// (randomized ones draw from keyed streams off the given seed) and all record
// name/family/params in metadata. Every generated instance passes validate().

// dense random instance; transition rows are uniform-simplex draws, rewards
// are deterministic with a Bernoulli(reward_density) support mask, globally
// rescaled so the conservative total-reward check holds with total exactly H
TabularMdp gen_random(int S, int A, int H, std::uint64_t seed, double reward_density = 0.5);

// two-state worst-case instance: states {x=0, y=1}, action a=0 replicated by
// any extras, b=1 strictly better in y for h < H. delta = c1_const/H,
// eps = 1/H, r(y,.)=1, r(x,.)=0, start at x. Requires H >= c1_const + 1.
TabularMdp gen_jao(int H, double c1_const = 4.0, int A = 2);

// S/2 independent two-state chains, one per start state, with a hidden
// optimal action per (chain, layer); staying on the chain pays 1 per step,
// any wrong action drops to an absorbing zero-reward state.
TabularMdp gen_hard_chain(int S, int A, int H, std::uint64_t seed);

// wraps an instance with a fresh start layer that enters the inner instance
// with probability p and otherwise absorbs at zero reward; H grows by one and
// the optimal start value scales exactly by p
TabularMdp gen_branch_wrap_value(const TabularMdp& inner, double p);

// cost-mode two-state instance with a hidden per-layer action: the right
// action pays cost p and stays, wrong actions pay 1 and absorb at zero cost.
// Requires p in [0, 1/4].
TabularMdp gen_cost_layered(int H, double p, int A, std::uint64_t seed);

// build from a spec object: {"family": ..., "params": {...}} or {"file": path}
TabularMdp make_env(const nlohmann::json& spec);

}  // namespace regretlab
