#include "regretlab/agents.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace regretlab {

using nlohmann::json;

BonusParams BonusParams::make(double delta, int S, int A, int H, std::uint64_t K) {
  BonusParams bp;
  bp.delta = delta;
  bp.finalize(S, A, H, K);
  return bp;
}

void BonusParams::finalize(int S, int A, int H, std::uint64_t K) {
  if (!(delta > 0.0) || delta >= 1.0)
    throw std::invalid_argument("BonusParams: delta must be in (0,1)");
  if (S < 1 || A < 1 || H < 1 || K < 1)
    throw std::invalid_argument("BonusParams: bad shape");
  const double k = static_cast<double>(K);
  delta_prime = delta / (200.0 * S * A * static_cast<double>(H) * H * k * k);
  log_term = std::log(1.0 / delta_prime);
}

double dist_variance(const double* p, const double* v, int n) {
  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    m1 += p[i] * v[i];
    m2 += p[i] * v[i] * v[i];
  }
  const double var = m2 - m1 * m1;
  return var > 0.0 ? var : 0.0;
}

double mvp_bonus(const BonusParams& bp, const double* phat, const double* v_next,
                 int n_states, double sigma_hat, double r_hat, std::uint64_t N, int H) {
  const double n = static_cast<double>(N == 0 ? 1 : N);
  const double L = bp.log_term;
  const double var_v = dist_variance(phat, v_next, n_states);
  const double var_r = std::max(sigma_hat - r_hat * r_hat, 0.0);
  return bp.c1 * std::sqrt(var_v * L / n) + bp.c2 * std::sqrt(var_r * L / n) +
         bp.c3 * H * L / n;
}

double f_helper(const double* p, const double* v, int n_states, double n, double L,
                int H) {
  double mean = 0.0;
  for (int i = 0; i < n_states; ++i) mean += p[i] * v[i];
  const double var = dist_variance(p, v, n_states);
  const double t1 = (20.0 / 3.0) * std::sqrt(var * L / n);
  const double t2 = (400.0 / 9.0) * H * L / n;
  return mean + std::max(t1, t2);
}

json Agent::snapshot() const {
  return json{{"version", "regret-lab-snapshot/1"}, {"agent", name()}};
}

namespace {

inline bool is_pow2(std::uint64_t n) { return n != 0 && (n & (n - 1)) == 0; }

int argmax_row(const ValueTable& t, int h, int s, int A) {
  int best = 0;
  for (int a = 1; a < A; ++a)
    if (t.Q(h, s, a) > t.Q(h, s, best)) best = a;
  return best;
}

json value_table_json(const ValueTable& t) {
  json q = json::array(), v = json::array();
  for (int h = 1; h <= t.H; ++h) {
    json qh = json::array();
    for (int s = 0; s < t.S; ++s) {
      json qs = json::array();
      for (int a = 0; a < t.A; ++a) qs.push_back(t.Q(h, s, a));
      qh.push_back(std::move(qs));
    }
    q.push_back(std::move(qh));
  }
  for (int h = 1; h <= t.H + 1; ++h) {
    json vh = json::array();
    for (int s = 0; s < t.S; ++s) vh.push_back(t.V(h, s));
    v.push_back(std::move(vh));
  }
  return json{{"q", std::move(q)}, {"v", std::move(v)}};
}

template <typename T>
json hsa_json(const std::vector<T>& x, int H, int S, int A) {
  json out = json::array();
  size_t i = 0;
  for (int h = 0; h < H; ++h) {
    json lh = json::array();
    for (int s = 0; s < S; ++s) {
      json ls = json::array();
      for (int a = 0; a < A; ++a) ls.push_back(x[i++]);
      lh.push_back(std::move(ls));
    }
    out.push_back(std::move(lh));
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// MvpAgent

MvpAgent::MvpAgent(int S_, int A_, int H_, RewardMode mode_, const BonusParams& params,
                   Exec ex)
    : S(S_), A(A_), H(H_), mode(mode_), params_(params), ex_(ex) {
  if (params_.log_term <= 0.0)
    throw std::invalid_argument("MvpAgent: BonusParams not finalized");
  const size_t nsa = static_cast<size_t>(H) * S * A;
  n_all_.assign(nsa, 0);
  n_batch_.assign(nsa, 0);
  theta_.assign(nsa, 0.0);
  kappa_.assign(nsa, 0.0);
  trans_batch_.assign(nsa * S, 0);
  model_n_.assign(nsa, 0);
  r_hat_.assign(nsa, 0.0);
  sigma_hat_.assign(nsa, 0.0);
  p_hat_.assign(nsa * S, 1.0 / S);  // convention for untouched tuples; never
                                    // enters a backup while n_all == 0
  tables_ = ValueTable(H, S, A);
  bonus_.assign(nsa, 0.0);
  refresh_count_.assign(nsa, 0);

  // optimistic initialization: H everywhere in reward mode, 0 in cost mode;
  // v rows follow (row H+1 stays 0 in both modes)
  const double q0 = mode == RewardMode::reward ? static_cast<double>(H) : 0.0;
  std::fill(tables_.q.begin(), tables_.q.end(), q0);
  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < S; ++s) tables_.V(h, s) = q0;
}

int MvpAgent::act(int h, int s) { return argmax_row(tables_, h, s, A); }

void MvpAgent::observe(int h, int s, int a, double r, int s_next) {
  const size_t t = idx(h, s, a);
  n_all_[t] += 1;
  n_batch_[t] += 1;
  theta_[t] += r;
  kappa_[t] += r * r;
  trans_batch_[t * S + s_next] += 1;
  if (is_pow2(n_all_[t])) refresh(t, h, s, a);
}

void MvpAgent::refresh(std::uint64_t t, int h, int s, int a) {
  const std::uint64_t N = n_batch_[t];
  model_n_[t] = N;
  const double dn = static_cast<double>(N);
  r_hat_[t] = theta_[t] / dn;
  sigma_hat_[t] = kappa_[t] / dn;
  for (int s2 = 0; s2 < S; ++s2)
    p_hat_[t * S + s2] = static_cast<double>(trans_batch_[t * S + s2]) / dn;
  // zero the batch: the next model is built from the second half of the
  // samples accumulated from here on
  n_batch_[t] = 0;
  theta_[t] = 0.0;
  kappa_[t] = 0.0;
  std::fill_n(trans_batch_.begin() + t * S, S, std::uint64_t{0});
  refresh_count_[t] += 1;
  refresh_log_.push_back({episode_, h, s, a, n_all_[t]});
  triggered_ = true;
}

void MvpAgent::end_episode() {
  if (triggered_) backup();
}

void MvpAgent::backup() {
  if (!triggered_) {
    // tolerated but tracked: backing up with no pending refresh is a no-op
    backup_warn_count_ += 1;
    return;
  }
  const double hi = mode == RewardMode::reward ? static_cast<double>(H) : 0.0;
  const double lo = mode == RewardMode::reward
                        ? -std::numeric_limits<double>::infinity()
                        : -static_cast<double>(H);
  for (int h = H; h >= 1; --h) {
    const double* v_next = tables_.v.data() + static_cast<size_t>(h) * S;
    auto body = [&](int s) {
      for (int a = 0; a < A; ++a) {
        const size_t t = idx(h, s, a);
        if (n_all_[t] == 0) continue;  // never visited: keep initialization
        const double* ph = p_hat_.data() + t * S;
        double pv = 0.0;
        for (int s2 = 0; s2 < S; ++s2) pv += ph[s2] * v_next[s2];
        const double b =
            mvp_bonus(params_, ph, v_next, S, sigma_hat_[t], r_hat_[t], model_n_[t], H);
        bonus_[t] = b;
        double q = r_hat_[t] + pv + b;
        if (q > hi) q = hi;
        if (q < lo) q = lo;
        tables_.Q(h, s, a) = q;
      }
      double best = tables_.Q(h, s, 0);
      for (int a = 1; a < A; ++a) best = std::max(best, tables_.Q(h, s, a));
      tables_.V(h, s) = best;
    };
    if (ex_ == Exec::parallel) {
#pragma omp parallel for schedule(static) if (S >= 64)
      for (int s = 0; s < S; ++s) body(s);
    } else {
      for (int s = 0; s < S; ++s) body(s);
    }
  }
  epoch_ += 1;
  triggered_ = false;
}

Policy MvpAgent::greedy_policy() const {
  Policy pi(H, S);
  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < S; ++s) pi.at(h, s) = argmax_row(tables_, h, s, A);
  return pi;
}

json MvpAgent::snapshot() const {
  json refresh = json::array();
  for (const auto& e : refresh_log_)
    refresh.push_back(json{{"k", e.k}, {"h", e.h}, {"s", e.s}, {"a", e.a},
                           {"n_all", e.n_all}});
  return json{
      {"version", "regret-lab-snapshot/1"},
      {"agent", "mvp"},
      {"mode", mode == RewardMode::reward ? "reward" : "cost"},
      {"S", S}, {"A", A}, {"H", H},
      {"delta", params_.delta},
      {"delta_prime", params_.delta_prime},
      {"log_term", params_.log_term},
      {"epochs", epoch_},
      {"counters",
       {{"n_all", hsa_json(n_all_, H, S, A)},
        {"batch_fill", hsa_json(n_batch_, H, S, A)},
        {"model_n", hsa_json(model_n_, H, S, A)},
        {"refresh_count", hsa_json(refresh_count_, H, S, A)}}},
      {"model",
       {{"r_hat", hsa_json(r_hat_, H, S, A)},
        {"sigma_hat", hsa_json(sigma_hat_, H, S, A)}}},
      {"tables", value_table_json(tables_)},
      {"bonus", hsa_json(bonus_, H, S, A)},
      {"refresh_log", std::move(refresh)},
      {"warnings", {{"backup_untriggered", backup_warn_count_}}},
  };
}

// ---------------------------------------------------------------------------
// UcbviAgent

UcbviAgent::UcbviAgent(int S_, int A_, int H_, RewardMode mode_,
                       const BonusParams& params, Exec ex)
    : S(S_), A(A_), H(H_), mode(mode_), params_(params), ex_(ex) {
  if (params_.log_term <= 0.0)
    throw std::invalid_argument("UcbviAgent: BonusParams not finalized");
  const size_t nsa = static_cast<size_t>(H) * S * A;
  n_all_.assign(nsa, 0);
  sum_r_.assign(nsa, 0.0);
  trans_counts_.assign(nsa * S, 0);
  tables_ = ValueTable(H, S, A);
  const double q0 = mode == RewardMode::reward ? static_cast<double>(H) : 0.0;
  std::fill(tables_.q.begin(), tables_.q.end(), q0);
  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < S; ++s) tables_.V(h, s) = q0;
}

int UcbviAgent::act(int h, int s) { return argmax_row(tables_, h, s, A); }

void UcbviAgent::observe(int h, int s, int a, double r, int s_next) {
  const size_t t = idx(h, s, a);
  n_all_[t] += 1;
  sum_r_[t] += r;
  trans_counts_[t * S + s_next] += 1;
}

void UcbviAgent::end_episode() {
  // full recompute from the all-samples model, every episode
  const double hi = mode == RewardMode::reward ? static_cast<double>(H) : 0.0;
  const double lo = mode == RewardMode::reward
                        ? -std::numeric_limits<double>::infinity()
                        : -static_cast<double>(H);
  const double L = params_.log_term;
  for (int h = H; h >= 1; --h) {
    const double* v_next = tables_.v.data() + static_cast<size_t>(h) * S;
    auto body = [&](int s) {
      for (int a = 0; a < A; ++a) {
        const size_t t = idx(h, s, a);
        const std::uint64_t n = n_all_[t];
        if (n == 0) continue;  // keep optimistic initialization
        const double dn = static_cast<double>(n);
        double pv = 0.0;
        for (int s2 = 0; s2 < S; ++s2)
          pv += static_cast<double>(trans_counts_[t * S + s2]) / dn * v_next[s2];
        const double b = H * std::sqrt(L / dn);
        double q = sum_r_[t] / dn + pv + b;
        if (q > hi) q = hi;
        if (q < lo) q = lo;
        tables_.Q(h, s, a) = q;
      }
      double best = tables_.Q(h, s, 0);
      for (int a = 1; a < A; ++a) best = std::max(best, tables_.Q(h, s, a));
      tables_.V(h, s) = best;
    };
    if (ex_ == Exec::parallel) {
#pragma omp parallel for schedule(static) if (S >= 64)
      for (int s = 0; s < S; ++s) body(s);
    } else {
      for (int s = 0; s < S; ++s) body(s);
    }
  }
  epoch_ += 1;
}

Policy UcbviAgent::greedy_policy() const {
  Policy pi(H, S);
  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < S; ++s) pi.at(h, s) = argmax_row(tables_, h, s, A);
  return pi;
}

json UcbviAgent::snapshot() const {
  return json{{"version", "regret-lab-snapshot/1"},
              {"agent", "ucbvi"},
              {"mode", mode == RewardMode::reward ? "reward" : "cost"},
              {"S", S}, {"A", A}, {"H", H},
              {"delta", params_.delta},
              {"log_term", params_.log_term},
              {"epochs", epoch_},
              {"counters", {{"n_all", hsa_json(n_all_, H, S, A)}}},
              {"tables", value_table_json(tables_)}};
}

// ---------------------------------------------------------------------------
// RandomAgent / OracleAgent

RandomAgent::RandomAgent(int A, int H, int S, std::uint64_t action_seed)
    : A_(A), H_(H), S_(S), stream_(action_seed) {}

int RandomAgent::act(int, int) { return static_cast<int>(stream_.uniform_int(A_)); }

Policy RandomAgent::greedy_policy() const {
  throw std::logic_error("RandomAgent has no deterministic policy");
}

json RandomAgent::snapshot() const {
  return json{{"version", "regret-lab-snapshot/1"}, {"agent", "random"},
              {"S", S_}, {"A", A_}, {"H", H_}};
}

OracleAgent::OracleAgent(const TabularMdp& env) : pi_(bellman_optimal(env).pi) {}

json OracleAgent::snapshot() const {
  json pol = json::array();
  for (int h = 1; h <= pi_.H; ++h) {
    json lh = json::array();
    for (int s = 0; s < pi_.S; ++s) lh.push_back(pi_.at(h, s));
    pol.push_back(std::move(lh));
  }
  return json{{"version", "regret-lab-snapshot/1"}, {"agent", "oracle"},
              {"policy", std::move(pol)}};
}

// ---------------------------------------------------------------------------

std::unique_ptr<Agent> make_agent(const json& spec, const TabularMdp& env,
                                  std::uint64_t K, std::uint64_t run_seed, Exec ex) {
  const std::string name = spec.at("name").get<std::string>();
  if (name == "random")
    return std::make_unique<RandomAgent>(
        env.A, env.H, env.S, derive_seed(run_seed, StreamPurpose::agent_action));
  if (name == "oracle") return std::make_unique<OracleAgent>(env);

  BonusParams bp;
  bp.delta = spec.value("delta", 0.1);
  if (spec.contains("c1")) bp.c1 = spec.at("c1").get<double>();
  if (spec.contains("c2")) bp.c2 = spec.at("c2").get<double>();
  if (spec.contains("c3")) bp.c3 = spec.at("c3").get<double>();
  bp.finalize(env.S, env.A, env.H, K);
  if (name == "mvp")
    return std::make_unique<MvpAgent>(env.S, env.A, env.H, env.mode, bp, ex);
  if (name == "ucbvi")
    return std::make_unique<UcbviAgent>(env.S, env.A, env.H, env.mode, bp, ex);
  throw std::invalid_argument("unknown agent: " + name);
}

std::string agent_spec_id(const json& spec) {
  std::ostringstream id;
  id << spec.at("name").get<std::string>();
  if (spec.contains("delta") && spec.at("delta").get<double>() != 0.1)
    id << "-d" << spec.at("delta").get<double>();
  for (const char* c : {"c1", "c2", "c3"})
    if (spec.contains(c)) id << "-" << c << spec.at(c).get<double>();
  return id.str();
}

}  // namespace regretlab
