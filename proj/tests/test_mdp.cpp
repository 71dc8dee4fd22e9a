#include <doctest.h>

#include "regretlab/mdp.hpp"

using namespace regretlab;

namespace {

// two-state, one-action, deterministic chain paying 1 at every step
TabularMdp tiny_valid(int H = 2) {
  TabularMdp m(2, 1, H);
  m.mu = {1.0, 0.0};
  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < 2; ++s) {
      m.row(h, s, 0)[s] = 1.0;
      m.reward(h, s, 0) = RewardSpec::det(s == 0 ? 1.0 : 0.0);
    }
  m.metadata = {{"name", "tiny"}};
  return m;
}

}  // namespace

TEST_SUITE("mdp") {

TEST_CASE("reward spec moments and supports") {
  const RewardSpec d = RewardSpec::det(0.75);
  CHECK(d.mean() == 0.75);
  CHECK(d.variance() == 0.0);
  CHECK(d.support_lo() == 0.75);
  CHECK(d.support_hi() == 0.75);
  CHECK_FALSE(d.consumes_draw());
  CHECK(d.sample(0.99) == 0.75);

  const RewardSpec b = RewardSpec::bernoulli(0.25, 2.0);
  CHECK(b.mean() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(b.variance() == doctest::Approx(4.0 * 0.25 * 0.75).epsilon(1e-15));
  CHECK(b.support_lo() == 0.0);
  CHECK(b.support_hi() == 2.0);
  CHECK(b.consumes_draw());
  CHECK(b.sample(0.1) == 2.0);
  CHECK(b.sample(0.25) == 0.0);  // strict inequality at the threshold
  CHECK(b.sample(0.9) == 0.0);

  const RewardSpec c = RewardSpec::bernoulli(0.5, -1.0);  // cost-mode draw
  CHECK(c.support_lo() == -1.0);
  CHECK(c.support_hi() == 0.0);
}

TEST_CASE("valid instance validates cleanly") {
  const TabularMdp m = tiny_valid();
  const ValidationReport rep = validate(m);
  CHECK(rep.ok());
  CHECK_NOTHROW(require_valid(m));
}

TEST_CASE("transition rows must sum to one within 1e-12") {
  TabularMdp m = tiny_valid();
  m.row(1, 0, 0)[0] = 0.5;  // row now sums to 0.5
  const ValidationReport rep = validate(m);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.issues.front().check == "transition_row");
  CHECK_THROWS_AS(require_valid(m), std::invalid_argument);
}

TEST_CASE("row-sum tolerance boundary") {
  // exactly representable drift of 2^-44 ~ 5.7e-14 passes; 1e-11 fails
  TabularMdp ok = tiny_valid();
  ok.row(1, 0, 0)[0] = 1.0 + 5.684341886080802e-14;
  CHECK(validate(ok).ok());
  TabularMdp bad = tiny_valid();
  bad.row(1, 0, 0)[0] = 1.0 + 1e-11;
  CHECK_FALSE(validate(bad).ok());
}

TEST_CASE("negative probabilities are rejected") {
  TabularMdp m = tiny_valid();
  m.row(1, 0, 0)[0] = 1.5;
  m.row(1, 0, 0)[1] = -0.5;
  const ValidationReport rep = validate(m);
  REQUIRE_FALSE(rep.ok());
}

TEST_CASE("initial distribution must be a distribution") {
  TabularMdp m = tiny_valid();
  m.mu = {0.7, 0.7};
  REQUIRE_FALSE(validate(m).ok());
  CHECK(validate(m).issues.front().check == "init_dist");

  TabularMdp m2 = tiny_valid();
  m2.mu = {1.3, -0.3};
  CHECK_FALSE(validate(m2).ok());
}

TEST_CASE("reward support must respect the mode range") {
  TabularMdp m = tiny_valid(2);
  m.reward(1, 0, 0) = RewardSpec::det(-0.25);  // negative in reward mode
  REQUIRE_FALSE(validate(m).ok());
  CHECK(validate(m).issues.front().check == "reward_support");

  TabularMdp c(1, 1, 1, RewardMode::cost);
  c.mu = {1.0};
  c.row(1, 0, 0)[0] = 1.0;
  c.reward(1, 0, 0) = RewardSpec::det(0.5);  // positive in cost mode
  CHECK_FALSE(validate(c).ok());
  c.reward(1, 0, 0) = RewardSpec::det(-0.5);
  CHECK(validate(c).ok());
}

TEST_CASE("bounded-total-reward check and the override flag") {
  // two layers each paying 1.5 -> conservative bound sum_h max r = 3 > H = 2
  TabularMdp m = tiny_valid(2);
  m.reward(1, 0, 0) = RewardSpec::det(1.5);
  m.reward(2, 0, 0) = RewardSpec::det(1.5);
  const ValidationReport rep = validate(m);
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.issues.front().check == "assumption1");

  m.metadata["assume_bounded_total_reward"] = true;
  const ValidationReport rep2 = validate(m);
  CHECK(rep2.ok());
  CHECK_FALSE(rep2.notes.empty());  // the override is recorded, not silent
}

TEST_CASE("dimension mismatches are caught") {
  TabularMdp m = tiny_valid();
  m.P.pop_back();
  CHECK_FALSE(validate(m).ok());
  TabularMdp m2 = tiny_valid();
  m2.mu.push_back(0.0);
  CHECK_FALSE(validate(m2).ok());
}

TEST_CASE("indexing helpers are layout-consistent") {
  TabularMdp m(3, 2, 4);
  CHECK(m.ridx(1, 0, 0) == 0);
  CHECK(m.ridx(1, 0, 1) == 1);
  CHECK(m.ridx(1, 1, 0) == 2);
  CHECK(m.ridx(2, 0, 0) == size_t(3 * 2));
  CHECK(m.pidx(1, 0, 0, 0) == 0);
  CHECK(m.pidx(1, 0, 0, 2) == 2);
  CHECK(m.pidx(1, 0, 1, 0) == 3);

  ValueTable vt(4, 3, 2);
  vt.V(5, 2) = 1.25;  // layer H+1 exists
  CHECK(vt.v[4 * 3 + 2] == 1.25);
  vt.Q(4, 2, 1) = 2.5;
  CHECK(vt.q[((4 - 1) * 3 + 2) * 2 + 1] == 2.5);
}

}  // TEST_SUITE
