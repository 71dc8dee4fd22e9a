#include "regretlab/metrics.hpp"

#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "regretlab/agents.hpp"
#include "regretlab/planner.hpp"

namespace regretlab {

using nlohmann::json;

namespace {

double start_mean(const TabularMdp& m, const ValueTable& vt) {
  double acc = 0.0;
  for (int s = 0; s < m.S; ++s) acc += m.mu[s] * vt.V(1, s);
  return acc;
}

}  // namespace

double compute_v_star(const TabularMdp& m) {
  if (m.mode != RewardMode::reward)
    throw std::invalid_argument("compute_v_star: reward-mode instance required");
  return start_mean(m, bellman_optimal(m).vt);
}

double compute_c_star(const TabularMdp& m) {
  if (m.mode != RewardMode::cost)
    throw std::invalid_argument("compute_c_star: cost-mode instance required");
  return -start_mean(m, bellman_optimal(m).vt);
}

double compute_var1(const TabularMdp& m) {
  if (m.mode != RewardMode::reward)
    throw std::invalid_argument("compute_var1: reward-mode instance required");
  const PlanResult plan = bellman_optimal(m);

  // auxiliary rewards can exceed H (they are variances, bounded by H^2/4 + reward
  // variance), hence the raw DP entry point
  const size_t nsa = static_cast<size_t>(m.H) * m.S * m.A;
  std::vector<double> aux(nsa, 0.0);
  for (int h = 1; h <= m.H; ++h) {
    const double* v_next = plan.vt.v.data() + static_cast<size_t>(h) * m.S;
    for (int s = 0; s < m.S; ++s)
      for (int a = 0; a < m.A; ++a)
        aux[m.ridx(h, s, a)] =
            dist_variance(m.row(h, s, a), v_next, m.S) + m.reward(h, s, a).variance();
  }
  ValueTable vt;
  detail::raw_bellman_optimal(m.S, m.A, m.H, m.P, aux, vt, nullptr, Exec::serial);
  return start_mean(m, vt);
}

std::vector<double> policy_start_variances(const TabularMdp& m, const Policy& pi) {
  // per-start-state conditional return variance under pi, by the law of total
  // variance: sigma^2_h(s) = Var(R) + Var(P, V^pi_{h+1}) + <P, sigma^2_{h+1}>
  std::vector<double> w(m.S, 0.0), var(m.S, 0.0);  // layer h+1 values
  std::vector<double> w_new(m.S), var_new(m.S);
  for (int h = m.H; h >= 1; --h) {
    for (int s = 0; s < m.S; ++s) {
      const int a = pi.at(h, s);
      const RewardSpec& r = m.reward(h, s, a);
      const double* p = m.row(h, s, a);
      double pw = 0.0, pv = 0.0;
      for (int s2 = 0; s2 < m.S; ++s2) {
        pw += p[s2] * w[s2];
        pv += p[s2] * var[s2];
      }
      w_new[s] = r.mean() + pw;
      double x = r.variance() + dist_variance(p, w.data(), m.S) + pv;
      var_new[s] = x > 0.0 ? x : 0.0;
    }
    w.swap(w_new);
    var.swap(var_new);
  }
  return var;
}

double policy_return_variance(const TabularMdp& m, const Policy& pi) {
  // variance with the start drawn from mu: <mu, sigma^2_1> + Var(mu, V^pi_1)
  const std::vector<double> var1s = policy_start_variances(m, pi);
  const ValueTable vt = policy_eval(m, pi);
  double acc = 0.0;
  for (int s = 0; s < m.S; ++s) acc += m.mu[s] * var1s[s];
  acc += dist_variance(m.mu.data(), vt.v.data(), m.S);
  return acc > 0.0 ? acc : 0.0;
}

std::optional<double> compute_var2_oracle(const TabularMdp& m, std::uint64_t policy_cap) {
  require_valid(m);
  std::uint64_t n_pol = 0;
  if (!brute_force_feasible(m, policy_cap, &n_pol)) return std::nullopt;

  const size_t cells = static_cast<size_t>(m.S) * m.H;
  Policy pi(m.H, m.S);
  double best = 0.0;  // the max over (pi, s) of Var[sum r | s_1 = s]
  for (std::uint64_t it = 0; it < n_pol; ++it) {
    const std::vector<double> var1s = policy_start_variances(m, pi);
    for (double v : var1s) best = std::max(best, v);
    for (size_t c = 0; c < cells; ++c) {
      if (++pi.a[c] < m.A) break;
      pi.a[c] = 0;
    }
  }
  return best;
}

int profile_index(std::uint64_t n_all) {
  if (n_all == 0) return 0;
  return std::bit_width(n_all);  // floor(log2 n) + 1
}

json AuditResult::to_json() const {
  json checks_j = json::array();
  for (const auto& c : checks)
    checks_j.push_back(json{{"name", c.name},
                            {"applicable", c.applicable},
                            {"pass", c.pass},
                            {"detail", c.detail}});
  return json{{"pass", pass()}, {"checks", std::move(checks_j)}};
}

namespace {

AuditCheck check_bound(const std::string& name, double value, double bound,
                       const char* rel = "<=") {
  AuditCheck c;
  c.name = name;
  c.pass = value <= bound;
  std::ostringstream os;
  os << value << " " << rel << " " << bound;
  c.detail = os.str();
  return c;
}

AuditCheck na(const std::string& name, const std::string& why) {
  AuditCheck c;
  c.name = name;
  c.applicable = false;
  c.detail = why;
  return c;
}

}  // namespace

AuditResult audit_run(const TabularMdp& env, const RunResult& run) {
  AuditResult res;
  const double K = static_cast<double>(run.K);
  const double log2K = std::log2(K);

  // optimism: zero tolerance on the violation count (the count itself was
  // accumulated with the 1e-9 entry tolerance)
  if (run.agent_snapshot.contains("tables")) {
    AuditCheck c;
    c.name = "optimism";
    c.pass = run.optimism_violations == 0;
    c.detail = std::to_string(run.optimism_violations) + " violations";
    res.checks.push_back(c);
  } else {
    res.checks.push_back(na("optimism", "agent has no value tables"));
  }

  const bool is_mvp = run.agent_snapshot.value("agent", "") == "mvp";
  if (is_mvp) {
    // refresh counts: at most floor(log2 K) + 1 per tuple
    const auto& rc = run.agent_snapshot.at("counters").at("refresh_count");
    std::uint64_t worst = 0;
    for (const auto& lh : rc)
      for (const auto& ls : lh)
        for (const auto& x : ls) worst = std::max(worst, x.get<std::uint64_t>());
    res.checks.push_back(check_bound(
        "doubling_refresh_count", static_cast<double>(worst),
        std::floor(std::log2(K)) + 1.0));

    // visit ratios: sum over steps of 1/max(N,1) <= 2 S A H log2 K
    res.checks.push_back(check_bound("doubling_visit_ratio", run.inv_count_sum,
                                     2.0 * env.S * env.A * env.H * log2K));

    // profile consistency: the j-th refresh of a tuple fires at n_all = 2^(j-1),
    // i.e. refresh ordinal == profile_index(n_all) at the trigger
    AuditCheck c;
    c.name = "profile_consistency";
    c.pass = true;
    std::vector<std::uint32_t> seen(static_cast<size_t>(env.H) * env.S * env.A, 0);
    const auto& logj = run.agent_snapshot.at("refresh_log");
    for (const auto& e : logj) {
      const std::uint64_t n_all = e.at("n_all").get<std::uint64_t>();
      const size_t t = (static_cast<size_t>(e.at("h").get<int>() - 1) * env.S +
                        e.at("s").get<int>()) * env.A + e.at("a").get<int>();
      seen[t] += 1;
      if (static_cast<int>(seen[t]) != profile_index(n_all) ||
          (n_all & (n_all - 1)) != 0) {
        c.pass = false;
        std::ostringstream os;
        os << "refresh #" << seen[t] << " at n_all=" << n_all;
        c.detail = os.str();
        break;
      }
    }
    if (c.pass) c.detail = std::to_string(logj.size()) + " refreshes consistent";
    res.checks.push_back(c);
  } else {
    res.checks.push_back(na("doubling_refresh_count", "not an mvp run"));
    res.checks.push_back(na("doubling_visit_ratio", "not an mvp run"));
    res.checks.push_back(na("profile_consistency", "not an mvp run"));
  }

  // ledger sanity: increments in [0, H], never-decreasing cumulative sum
  {
    AuditCheck c;
    c.name = "ledger";
    c.pass = true;
    for (double g : run.ledger.increments)
      if (!(g >= 0.0) || g > env.H + 1e-9) {
        c.pass = false;
        c.detail = "increment " + std::to_string(g) + " outside [0, H]";
        break;
      }
    if (c.pass) c.detail = "increments within [0, H]";
    res.checks.push_back(c);
  }

  res.checks.push_back(
      check_bound("regret_leq_HK", run.ledger.cum, env.H * K + 1e-9));
  return res;
}

AuditResult audit_payload(const json& payload) {
  AuditResult res;
  const double K = payload.at("K").get<double>();
  const double S = payload.at("S").get<double>();
  const double A = payload.at("A").get<double>();
  const double H = payload.at("H").get<double>();
  const double log2K = std::log2(K);

  if (payload.value("has_q_tables", false)) {
    AuditCheck c;
    c.name = "optimism";
    const auto v = payload.at("optimism_violations").get<std::uint64_t>();
    c.pass = v == 0;
    c.detail = std::to_string(v) + " violations";
    res.checks.push_back(c);
  } else {
    res.checks.push_back(na("optimism", "agent has no value tables"));
  }

  if (payload.value("is_mvp", false)) {
    res.checks.push_back(check_bound("doubling_refresh_count",
                                     payload.at("max_refresh_count").get<double>(),
                                     std::floor(std::log2(K)) + 1.0));
    res.checks.push_back(check_bound("doubling_visit_ratio",
                                     payload.at("inv_count_sum").get<double>(),
                                     2.0 * S * A * H * log2K));
    AuditCheck c;
    c.name = "profile_consistency";
    c.pass = payload.at("profile_consistent").get<bool>();
    c.detail = c.pass ? "recorded consistent" : "recorded inconsistent";
    res.checks.push_back(c);
  } else {
    res.checks.push_back(na("doubling_refresh_count", "not an mvp run"));
    res.checks.push_back(na("doubling_visit_ratio", "not an mvp run"));
    res.checks.push_back(na("profile_consistency", "not an mvp run"));
  }

  {
    AuditCheck c;
    c.name = "ledger";
    c.pass = payload.at("ledger_ok").get<bool>();
    c.detail = c.pass ? "recorded within bounds" : "recorded violation";
    res.checks.push_back(c);
  }
  res.checks.push_back(check_bound("regret_leq_HK",
                                   payload.at("cum_regret").get<double>(),
                                   H * K + 1e-9));
  return res;
}

FitResult fit_scaling(const std::vector<std::vector<double>>& curves,
                      const std::vector<std::uint64_t>& checkpoints,
                      std::uint64_t min_checkpoint) {
  FitResult fit;
  if (curves.empty()) return fit;
  for (const auto& c : curves)
    if (c.size() != checkpoints.size())
      throw std::invalid_argument("fit_scaling: curve/checkpoint length mismatch");

  std::vector<double> xs, ys;
  for (size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < min_checkpoint) continue;
    double mean = 0.0;
    for (const auto& c : curves) mean += c[i];
    mean /= static_cast<double>(curves.size());
    if (!(mean > 0.0)) continue;  // log undefined; skip the checkpoint
    xs.push_back(std::log2(static_cast<double>(checkpoints[i])));
    ys.push_back(std::log2(mean));
    if (fit.window_lo == 0) fit.window_lo = checkpoints[i];
    fit.window_hi = checkpoints[i];
  }
  const int n = static_cast<int>(xs.size());
  fit.n_points = n;
  if (n < 2) return fit;

  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (int i = 0; i < n; ++i) {
    const double e = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ssr += e * e;
  }
  fit.stderr_slope = n > 2 ? std::sqrt(ssr / (n - 2) / sxx) : 0.0;
  fit.ok = true;
  return fit;
}

}  // namespace regretlab
