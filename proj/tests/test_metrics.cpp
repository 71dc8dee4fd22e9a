#include <doctest.h>

#include <cmath>
#include <vector>

#include "regretlab/agents.hpp"
#include "regretlab/envs.hpp"
#include "regretlab/metrics.hpp"
#include "regretlab/planner.hpp"
#include "regretlab/simulate.hpp"

using namespace regretlab;
using nlohmann::json;

namespace {

// expected sum of auxiliary rewards under a fixed policy, recomputed here
// from scratch (plain backward recursion, no library planner involved)
double aux_return(const TabularMdp& m, const std::vector<double>& aux,
                  const Policy& pi) {
  std::vector<double> v(m.S, 0.0), v_new(m.S);
  for (int h = m.H; h >= 1; --h) {
    for (int s = 0; s < m.S; ++s) {
      const int a = pi.at(h, s);
      double pv = 0.0;
      const double* p = m.row(h, s, a);
      for (int s2 = 0; s2 < m.S; ++s2) pv += p[s2] * v[s2];
      v_new[s] = aux[m.ridx(h, s, a)] + pv;
    }
    v.swap(v_new);
  }
  double acc = 0.0;
  for (int s = 0; s < m.S; ++s) acc += m.mu[s] * v[s];
  return acc;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("v_star: hard chain pays H, zero-reward env pays 0") {
  const TabularMdp hc = gen_hard_chain(4, 3, 6, 2);
  CHECK(compute_v_star(hc) == 6.0);

  TabularMdp z(2, 1, 3);
  z.mu = {1.0, 0.0};
  for (int h = 1; h <= 3; ++h)
    for (int s = 0; s < 2; ++s) z.row(h, s, 0)[s] = 1.0;
  CHECK(compute_v_star(z) == 0.0);

  CHECK_THROWS_AS(compute_v_star(gen_cost_layered(4, 0.1, 2, 1)),
                  std::invalid_argument);
}

TEST_CASE("v_star: branch-wrapped hard chain scales by p") {
  const TabularMdp inner = gen_hard_chain(4, 2, 5, 3);
  const TabularMdp w = gen_branch_wrap_value(inner, 0.3);
  CHECK(std::abs(compute_v_star(w) - 1.5) <= 1e-12);  // p * H
}

TEST_CASE("c_star: layered cost instance pays exactly H*p") {
  CHECK(compute_c_star(gen_cost_layered(8, 0.1, 2, 1)) == 0.8);
  CHECK(compute_c_star(gen_cost_layered(8, 0.0, 2, 1)) == 0.0);
  CHECK_THROWS_AS(compute_c_star(gen_jao(6)), std::invalid_argument);
}

TEST_CASE("c_star: agrees with brute force on a stochastic cost instance") {
  TabularMdp m(2, 2, 2, RewardMode::cost);
  m.mu = {0.5, 0.5};
  for (int h = 1; h <= 2; ++h)
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a) {
        double* row = m.row(h, s, a);
        row[0] = a == 0 ? 0.8 : 0.3;
        row[1] = 1.0 - row[0];
        m.reward(h, s, a) = s == 0 ? RewardSpec::bernoulli(0.5, -1.0)
                                   : RewardSpec::det(-0.25 * (a + 1));
      }
  m.metadata = {{"name", "cost-toy"}};
  const PlanResult brute = brute_force_plan(m);
  double expect = 0.0;
  for (int s = 0; s < 2; ++s) expect -= m.mu[s] * brute.vt.V(1, s);
  CHECK(compute_c_star(m) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("var1: deterministic instances have none") {
  CHECK(compute_var1(gen_hard_chain(4, 3, 6, 7)) == 0.0);
  CHECK(compute_var1(gen_hard_chain(8, 2, 4, 1)) == 0.0);
}

TEST_CASE("var1: lone Bernoulli reward at H=1") {
  TabularMdp m(1, 2, 1);
  m.mu = {1.0};
  for (int a = 0; a < 2; ++a) {
    m.row(1, 0, a)[0] = 1.0;
    m.reward(1, 0, a) = a == 0 ? RewardSpec::bernoulli(0.5, 1.0) : RewardSpec::det(0.0);
  }
  CHECK(compute_var1(m) == 0.25);  // max_pi picks the noisy action
}

TEST_CASE("var1: transition variance against V*") {
  // layer 1 splits 50/50 into states worth 0 and 2; no reward noise anywhere
  TabularMdp m(2, 1, 2);
  m.mu = {1.0, 0.0};
  for (int s = 0; s < 2; ++s) {
    m.row(1, s, 0)[0] = 0.5;
    m.row(1, s, 0)[1] = 0.5;
    m.reward(1, s, 0) = RewardSpec::det(0.0);
    m.row(2, s, 0)[s] = 1.0;
    m.reward(2, s, 0) = RewardSpec::det(s == 1 ? 2.0 : 0.0);
  }
  const PlanResult opt = bellman_optimal(m);
  CHECK(opt.vt.V(2, 0) == 0.0);
  CHECK(opt.vt.V(2, 1) == 2.0);
  CHECK(compute_var1(m) == 1.0);  // V([.5,.5],[0,2]) = 1 at step 1, 0 at step 2
}

TEST_CASE("var1: equals the brute-force max over policies of the aux return") {
  for (std::uint64_t seed : {4ull, 9ull, 23ull}) {
    TabularMdp m = gen_random(2, 2, 2, seed, 0.9);
    m.reward(1, 0, 0) = RewardSpec::bernoulli(0.4, m.reward(1, 0, 0).mean());

    const PlanResult plan = bellman_optimal(m);
    std::vector<double> aux(m.R.size(), 0.0);
    for (int h = 1; h <= m.H; ++h) {
      const double* v_next = plan.vt.v.data() + static_cast<size_t>(h) * m.S;
      for (int s = 0; s < m.S; ++s)
        for (int a = 0; a < m.A; ++a)
          aux[m.ridx(h, s, a)] = dist_variance(m.row(h, s, a), v_next, m.S) +
                                 m.reward(h, s, a).variance();
    }
    double best = 0.0;
    Policy pi(m.H, m.S);
    for (int it = 0; it < 16; ++it) {  // 2^(2*2) policies
      best = std::max(best, aux_return(m, aux, pi));
      for (size_t c = 0; c < pi.a.size(); ++c) {
        if (++pi.a[c] < m.A) break;
        pi.a[c] = 0;
      }
    }
    CHECK(compute_var1(m) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("policy start variances: per-state law of total variance") {
  // two independent Bernoulli(1/2) rewards in sequence: variance 1/4 + 1/4
  TabularMdp m(1, 1, 2);
  m.mu = {1.0};
  for (int h = 1; h <= 2; ++h) {
    m.row(h, 0, 0)[0] = 1.0;
    m.reward(h, 0, 0) = RewardSpec::bernoulli(0.5, 1.0);
  }
  const Policy pi(2, 1);
  const std::vector<double> v = policy_start_variances(m, pi);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == 0.5);
  CHECK(policy_return_variance(m, pi) == 0.5);  // point-mass start adds nothing
}

TEST_CASE("var2: conditional on the start state, not mixed over it") {
  // deterministic two-chain instance: every conditional return is a constant,
  // so var2 = 0 -- even though a policy that plays one chain right and the
  // other wrong has nonzero return variance under the uniform start mix
  const TabularMdp m = gen_hard_chain(4, 2, 2, 5);
  const auto v2 = compute_var2_oracle(m);
  REQUIRE(v2.has_value());
  CHECK(*v2 == 0.0);

  const auto astar =
      m.metadata["params"]["optimal_actions"].get<std::vector<std::vector<int>>>();
  Policy lopsided(m.H, m.S);
  for (int h = 1; h <= m.H; ++h) {
    lopsided.at(h, 0) = astar[0][h - 1];          // chain 0 played right
    lopsided.at(h, 2) = 1 - astar[1][h - 1];      // chain 1 played wrong
  }
  CHECK(policy_return_variance(m, lopsided) == 1.0);  // returns {2, 0} @ 50/50
  const std::vector<double> per_start = policy_start_variances(m, lopsided);
  CHECK(per_start[0] == 0.0);
  CHECK(per_start[2] == 0.0);
}

TEST_CASE("var2: single Bernoulli cell and the cap") {
  TabularMdp m(1, 1, 1);
  m.mu = {1.0};
  m.row(1, 0, 0)[0] = 1.0;
  m.reward(1, 0, 0) = RewardSpec::bernoulli(0.5, 1.0);
  const auto v2 = compute_var2_oracle(m);
  REQUIRE(v2.has_value());
  CHECK(*v2 == 0.25);

  const TabularMdp big = gen_random(3, 3, 4, 1, 0.5);  // 3^12 policies
  CHECK_FALSE(compute_var2_oracle(big, 1000).has_value());
}

TEST_CASE("var metrics live in [0, H^2]") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const TabularMdp m = gen_random(2, 2, 3, seed, 0.7);
    const double h2 = double(m.H) * m.H;
    const double v1 = compute_var1(m);
    CHECK(v1 >= 0.0);
    CHECK(v1 <= h2);
    const auto v2 = compute_var2_oracle(m);
    REQUIRE(v2.has_value());
    CHECK(*v2 >= 0.0);
    CHECK(*v2 <= h2);
    CHECK(std::min(v1, *v2) <= h2);
  }
}

TEST_CASE("profile index: 0 before samples, else floor(log2 n) + 1") {
  CHECK(profile_index(0) == 0);
  CHECK(profile_index(1) == 1);
  CHECK(profile_index(2) == 2);
  CHECK(profile_index(3) == 2);
  CHECK(profile_index(4) == 3);
  CHECK(profile_index(5) == 3);
  CHECK(profile_index(7) == 3);
  CHECK(profile_index(8) == 4);
  CHECK(profile_index(1024) == 11);
}

TEST_CASE("fit_scaling: synthetic curves recover their exponents") {
  const std::vector<std::uint64_t> cps = {128, 256, 512, 1024, 2048};
  std::vector<double> sqrt_curve, lin_curve;
  for (std::uint64_t k : cps) {
    sqrt_curve.push_back(3.0 * std::sqrt(double(k)));
    lin_curve.push_back(0.25 * double(k));
  }
  const FitResult fs = fit_scaling({sqrt_curve, sqrt_curve}, cps, 128);
  REQUIRE(fs.ok);
  CHECK(fs.slope == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(fs.n_points == 5);
  CHECK(fs.stderr_slope <= 1e-9);
  CHECK(fs.window_lo == 128);
  CHECK(fs.window_hi == 2048);

  const FitResult fl = fit_scaling({lin_curve}, cps, 128);
  REQUIRE(fl.ok);
  CHECK(fl.slope == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(fl.intercept - std::log2(0.25)) <= 1e-9);
}

TEST_CASE("fit_scaling: window and degenerate input handling") {
  const std::vector<std::uint64_t> cps = {16, 32, 128, 256};
  std::vector<double> curve = {1.0, 2.0, 5.0, 9.0};
  const FitResult f = fit_scaling({curve}, cps, 100);
  REQUIRE(f.ok);
  CHECK(f.n_points == 2);  // only 128 and 256 make the window
  CHECK(f.window_lo == 128);

  CHECK_FALSE(fit_scaling({{0.0, 0.0, 0.0, 1.0}}, cps, 1).ok);  // one usable point
  CHECK_FALSE(fit_scaling({}, cps, 1).ok);
  CHECK_THROWS_AS(fit_scaling({{1.0, 2.0}}, cps, 1), std::invalid_argument);
}

TEST_CASE("audit payload re-evaluation matches the recorded verdicts") {
  json payload{{"K", 64},        {"S", 2},
               {"A", 2},         {"H", 6},
               {"has_q_tables", true},
               {"is_mvp", true}, {"optimism_violations", 0},
               {"max_refresh_count", 7},
               {"inv_count_sum", 10.0},
               {"profile_consistent", true},
               {"ledger_ok", true},
               {"cum_regret", 100.0}};
  CHECK(audit_payload(payload).pass());

  json p1 = payload;
  p1["optimism_violations"] = 2;
  CHECK_FALSE(audit_payload(p1).pass());

  json p2 = payload;
  p2["max_refresh_count"] = 8;  // floor(log2 64) + 1 = 7 is the bound
  CHECK_FALSE(audit_payload(p2).pass());

  json p3 = payload;
  p3["inv_count_sum"] = 2.0 * 2 * 2 * 6 * 6 + 1.0;  // past 2 S A H log2 K
  CHECK_FALSE(audit_payload(p3).pass());

  json p4 = payload;
  p4["profile_consistent"] = false;
  CHECK_FALSE(audit_payload(p4).pass());

  json p5 = payload;
  p5["cum_regret"] = 6.0 * 64 + 1.0;
  CHECK_FALSE(audit_payload(p5).pass());

  json p6 = payload;
  p6["is_mvp"] = false;  // the doubling checks become non-applicable
  p6["has_q_tables"] = false;
  CHECK(audit_payload(p6).pass());
}

}  // TEST_SUITE
