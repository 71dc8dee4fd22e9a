#include "regretlab/mdp.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace regretlab {

namespace {
constexpr double kRowSumTol = 1e-12;
constexpr double kAssum1Tol = 1e-9;

std::string tuple_str(int h, int s, int a) {
  std::ostringstream os;
  os << "(h=" << h << ", s=" << s << ", a=" << a << ")";
  return os.str();
}
}  // namespace

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  if (ok()) {
    os << "valid";
  } else {
    for (const auto& is : issues) os << "[" << is.check << "] " << is.detail << "\n";
  }
  for (const auto& n : notes) os << "note: " << n << "\n";
  return os.str();
}

ValidationReport validate(const TabularMdp& m) {
  ValidationReport rep;
  auto fail = [&](const std::string& check, const std::string& detail) {
    rep.issues.push_back({check, detail});
  };

  if (m.S < 1 || m.A < 1 || m.H < 1) {
    fail("dims", "S, A, H must all be >= 1");
    return rep;
  }
  const size_t nsa = static_cast<size_t>(m.H) * m.S * m.A;
  if (m.P.size() != nsa * m.S || m.R.size() != nsa ||
      m.mu.size() != static_cast<size_t>(m.S)) {
    fail("dims", "array sizes inconsistent with S/A/H");
    return rep;
  }

  // transition rows: nonnegative, each summing to 1 within 1e-12.
  // report only the first offending row per check.
  bool row_ok = true;
  for (int h = 1; h <= m.H && row_ok; ++h)
    for (int s = 0; s < m.S && row_ok; ++s)
      for (int a = 0; a < m.A && row_ok; ++a) {
        const double* p = m.row(h, s, a);
        double sum = 0.0;
        for (int s2 = 0; s2 < m.S; ++s2) {
          if (!(p[s2] >= 0.0) || !std::isfinite(p[s2])) {
            fail("transition_row", "negative or non-finite mass at " + tuple_str(h, s, a));
            row_ok = false;
            break;
          }
          sum += p[s2];
        }
        if (row_ok && std::abs(sum - 1.0) > kRowSumTol) {
          std::ostringstream os;
          os << "row sum " << sum << " at " << tuple_str(h, s, a);
          fail("transition_row", os.str());
          row_ok = false;
        }
      }

  {
    double sum = 0.0;
    bool neg = false;
    for (double x : m.mu) {
      if (!(x >= 0.0) || !std::isfinite(x)) neg = true;
      sum += x;
    }
    if (neg)
      fail("init_dist", "negative or non-finite mass");
    else if (std::abs(sum - 1.0) > kRowSumTol) {
      std::ostringstream os;
      os << "init_dist sums to " << sum;
      fail("init_dist", os.str());
    }
  }

  // reward supports must respect the mode's range
  const double lo = m.mode == RewardMode::reward ? 0.0 : -static_cast<double>(m.H);
  const double hi = m.mode == RewardMode::reward ? static_cast<double>(m.H) : 0.0;
  bool rew_ok = true;
  for (int h = 1; h <= m.H && rew_ok; ++h)
    for (int s = 0; s < m.S && rew_ok; ++s)
      for (int a = 0; a < m.A && rew_ok; ++a) {
        const RewardSpec& r = m.reward(h, s, a);
        if (!std::isfinite(r.mean_value) || !std::isfinite(r.magnitude) ||
            !std::isfinite(r.success_prob)) {
          fail("reward_spec", "non-finite parameter at " + tuple_str(h, s, a));
          rew_ok = false;
          break;
        }
        if (r.kind == RewardSpec::Kind::scaled_bernoulli &&
            (r.success_prob < 0.0 || r.success_prob > 1.0)) {
          fail("reward_spec", "success_prob outside [0,1] at " + tuple_str(h, s, a));
          rew_ok = false;
          break;
        }
        if (r.support_lo() < lo - kAssum1Tol || r.support_hi() > hi + kAssum1Tol) {
          std::ostringstream os;
          os << "support [" << r.support_lo() << ", " << r.support_hi()
             << "] outside [" << lo << ", " << hi << "] at " << tuple_str(h, s, a);
          fail("reward_support", os.str());
          rew_ok = false;
        }
      }

  // conservative total-reward check: sum over layers of the per-layer worst
  // support magnitude must not exceed H. This implies the bounded-total-
  // reward assumption on every trajectory; it is sufficient, not necessary,
  // hence the explicit override flag.
  if (rew_ok) {
    double total = 0.0;
    for (int h = 1; h <= m.H; ++h) {
      double worst = 0.0;
      for (int s = 0; s < m.S; ++s)
        for (int a = 0; a < m.A; ++a) {
          const RewardSpec& r = m.reward(h, s, a);
          const double mag = m.mode == RewardMode::reward ? r.support_hi()
                                                          : -r.support_lo();
          if (mag > worst) worst = mag;
        }
      total += worst;
    }
    if (total > m.H + kAssum1Tol) {
      if (m.assume_bounded_total_reward()) {
        std::ostringstream os;
        os << "conservative total-reward check exceeded (" << total << " > " << m.H
           << ") but assume_bounded_total_reward is set";
        rep.notes.push_back(os.str());
      } else {
        std::ostringstream os;
        os << "sum of per-layer max supports " << total << " > H = " << m.H
           << " (set assume_bounded_total_reward in metadata to override)";
        fail("assumption1", os.str());
      }
    }
  }

  return rep;
}

void require_valid(const TabularMdp& m) {
  ValidationReport rep = validate(m);
  if (!rep.ok())
    throw std::invalid_argument("invalid mdp: [" + rep.issues.front().check + "] " +
                                rep.issues.front().detail);
}

}  // namespace regretlab
