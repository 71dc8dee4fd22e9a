#include "regretlab/simulate.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace regretlab {

using nlohmann::json;

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

inline void fnv_mix(std::uint64_t& h, const void* data, size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

size_t tuple_index(const TabularMdp& env, int h, int s, int a) {
  return (static_cast<size_t>(h - 1) * env.S + s) * env.A + a;
}

}  // namespace

// ---------------------------------------------------------------------------
// backends

OnDemandBackend::OnDemandBackend(const TabularMdp& env, std::uint64_t run_seed)
    : env_(&env), seed_(run_seed),
      init_stream_(derive_seed(run_seed, StreamPurpose::init_state)),
      trans_(static_cast<size_t>(env.H) * env.S * env.A),
      rew_(static_cast<size_t>(env.H) * env.S * env.A) {}

RandomStream& OnDemandBackend::stream(std::vector<std::unique_ptr<RandomStream>>& pool,
                                      StreamPurpose purpose, int h, int s, int a) {
  auto& slot = pool[tuple_index(*env_, h, s, a)];
  if (!slot)
    slot = std::make_unique<RandomStream>(derive_seed(
        seed_, purpose, static_cast<std::uint64_t>(h), static_cast<std::uint64_t>(s),
        static_cast<std::uint64_t>(a)));
  return *slot;
}

int OnDemandBackend::init_state() {
  return init_stream_.categorical(env_->mu.data(), env_->S);
}

double OnDemandBackend::reward(int h, int s, int a) {
  const RewardSpec& spec = env_->reward(h, s, a);
  if (!spec.consumes_draw()) return spec.sample(0.0);
  return spec.sample(stream(rew_, StreamPurpose::reward, h, s, a).uniform());
}

int OnDemandBackend::next_state(int h, int s, int a) {
  return stream(trans_, StreamPurpose::transition, h, s, a)
      .categorical(env_->row(h, s, a), env_->S);
}

ExpandedBackend::ExpandedBackend(const TabularMdp& env, std::uint64_t run_seed,
                                 std::uint64_t capacity)
    : env_(&env), seed_(run_seed), cap_(capacity),
      init_stream_(derive_seed(run_seed, StreamPurpose::init_state)),
      banks_(static_cast<size_t>(env.H) * env.S * env.A) {
  if (capacity == 0) throw std::invalid_argument("ExpandedBackend: zero capacity");
}

ExpandedBackend::Bank& ExpandedBackend::bank(int h, int s, int a) {
  Bank& b = banks_[tuple_index(*env_, h, s, a)];
  if (!b.filled) {
    const auto hh = static_cast<std::uint64_t>(h);
    const auto ss = static_cast<std::uint64_t>(s);
    const auto aa = static_cast<std::uint64_t>(a);
    RandomStream ts(derive_seed(seed_, StreamPurpose::transition, hh, ss, aa));
    b.next.resize(cap_);
    for (std::uint64_t i = 0; i < cap_; ++i)
      b.next[i] = ts.categorical(env_->row(h, s, a), env_->S);
    if (env_->reward(h, s, a).consumes_draw()) {
      RandomStream rs(derive_seed(seed_, StreamPurpose::reward, hh, ss, aa));
      b.rew_u.resize(cap_);
      for (std::uint64_t i = 0; i < cap_; ++i) b.rew_u[i] = rs.uniform();
    }
    b.filled = true;
  }
  return b;
}

int ExpandedBackend::init_state() {
  return init_stream_.categorical(env_->mu.data(), env_->S);
}

double ExpandedBackend::reward(int h, int s, int a) {
  const RewardSpec& spec = env_->reward(h, s, a);
  if (!spec.consumes_draw()) return spec.sample(0.0);
  Bank& b = bank(h, s, a);
  if (b.rew_cur >= cap_)
    throw std::runtime_error("expanded backend: reward bank exhausted at (h=" +
                             std::to_string(h) + ", s=" + std::to_string(s) +
                             ", a=" + std::to_string(a) + ")");
  return spec.sample(b.rew_u[b.rew_cur++]);
}

int ExpandedBackend::next_state(int h, int s, int a) {
  Bank& b = bank(h, s, a);
  if (b.next_cur >= cap_)
    throw std::runtime_error("expanded backend: sample bank exhausted at (h=" +
                             std::to_string(h) + ", s=" + std::to_string(s) +
                             ", a=" + std::to_string(a) + ")");
  return b.next[b.next_cur++];
}

std::unique_ptr<SampleBackend> make_backend(const std::string& name,
                                            const TabularMdp& env,
                                            std::uint64_t run_seed, std::uint64_t K) {
  if (name == "ondemand") return std::make_unique<OnDemandBackend>(env, run_seed);
  if (name == "expanded") return std::make_unique<ExpandedBackend>(env, run_seed, K);
  throw std::invalid_argument("unknown backend: " + name);
}

// ---------------------------------------------------------------------------
// the online loop

std::vector<std::uint64_t> default_checkpoints(std::uint64_t K) {
  std::vector<std::uint64_t> cps;
  for (std::uint64_t c = 1; c <= K; c *= 2) {
    cps.push_back(c);
    if (c > K / 2) break;  // overflow guard
  }
  if (cps.empty() || cps.back() != K) cps.push_back(K);
  return cps;
}

RunResult run_online(const TabularMdp& env, Agent& agent, SampleBackend& backend,
                     const RunOptions& opts) {
  require_valid(env);
  if (opts.K == 0) throw std::invalid_argument("run_online: K must be >= 1");

  const auto t0 = std::chrono::steady_clock::now();

  const PlanResult plan = bellman_optimal(env);
  RunResult res;
  res.K = opts.K;
  res.backend = backend.name();
  {
    double acc = 0.0;
    for (int s = 0; s < env.S; ++s) acc += env.mu[s] * plan.vt.V(1, s);
    res.v_star_start_mean = acc;
  }

  std::vector<std::uint64_t> cps =
      opts.checkpoints.empty() ? default_checkpoints(opts.K) : opts.checkpoints;
  size_t cp_next = 0;

  const MvpAgent* mvp = dynamic_cast<const MvpAgent*>(&agent);
  const bool uniform_policy = agent.policy_kind() == PolicyKind::uniform_random;

  // value of the acting policy, refreshed on epoch change
  ValueTable v_pi;
  std::uint64_t cached_epoch = 0;
  bool have_cache = false;
  auto refresh_policy_value = [&]() {
    if (uniform_policy) {
      if (!have_cache) v_pi = uniform_policy_eval(env);
    } else {
      v_pi = policy_eval(env, agent.greedy_policy());
    }
    if (opts.record_epoch_policies) {
      EpochPolicyRecord rec;
      rec.first_episode = res.ledger.increments.size() + 1;
      rec.epoch = agent.policy_epoch();
      if (!uniform_policy) rec.pi = agent.greedy_policy();
      double acc = 0.0;
      for (int s = 0; s < env.S; ++s) acc += env.mu[s] * v_pi.V(1, s);
      rec.v_pi_start_mean = acc;
      res.epoch_policies.push_back(std::move(rec));
    }
    have_cache = true;
    cached_epoch = agent.policy_epoch();
    res.epochs += 1;
  };

  auto count_optimism_violations = [&]() {
    const ValueTable* q = agent.q_table();
    if (!q || !opts.audit) return;
    std::uint64_t v = 0;
    for (size_t i = 0; i < q->q.size(); ++i)
      if (q->q[i] < plan.vt.q[i] - 1e-9) ++v;
    res.optimism_violations += v;
  };

  std::uint64_t h64 = kFnvOffset;
  count_optimism_violations();  // initialization counts as an epoch's tables

  for (std::uint64_t k = 1; k <= opts.K; ++k) {
    agent.begin_episode(k);
    if (!have_cache || agent.policy_epoch() != cached_epoch) refresh_policy_value();

    const int s1 = backend.init_state();
    const double gap = plan.vt.V(1, s1) - v_pi.V(1, s1);
    res.ledger.add(gap);

    EpisodeTrajectory traj;
    if (opts.record_trajectories) {
      traj.k = k;
      traj.policy_epoch = agent.policy_epoch();
      traj.steps.reserve(env.H);
    }

    int s = s1;
    for (int h = 1; h <= env.H; ++h) {
      const int a = agent.act(h, s);
      if (mvp && opts.audit) {
        res.inv_count_sum += 1.0 / static_cast<double>(mvp->model_n(h, s, a));
        res.bonus_sum += mvp->bonus_at(h, s, a);
      }
      const double r = backend.reward(h, s, a);
      const int s2 = backend.next_state(h, s, a);
      fnv_mix(h64, &h, sizeof h);
      fnv_mix(h64, &s, sizeof s);
      fnv_mix(h64, &a, sizeof a);
      fnv_mix(h64, &r, sizeof r);
      fnv_mix(h64, &s2, sizeof s2);
      if (opts.record_trajectories) {
        traj.steps.push_back({h, s, a, s2, r});
        traj.reward_sum += r;
      }
      agent.observe(h, s, a, r, s2);
      s = s2;
    }
    if (opts.record_trajectories) res.trajectories.push_back(std::move(traj));

    const std::uint64_t epoch_before = agent.policy_epoch();
    agent.end_episode();
    if (agent.policy_epoch() != epoch_before) count_optimism_violations();

    if (cp_next < cps.size() && k == cps[cp_next]) {
      CheckpointRow row;
      row.k = k;
      row.cum_regret = res.ledger.cum;
      row.epochs = res.epochs;
      row.refreshes = mvp ? mvp->refresh_log().size() : 0;
      row.optimism_violations = res.optimism_violations;
      res.checkpoints.push_back(row);
      ++cp_next;
    }
  }

  res.traj_hash = h64;
  res.refreshes = mvp ? mvp->refresh_log().size() : 0;
  res.agent_snapshot = agent.snapshot();
  if (opts.record_wall_ms) {
    const auto t1 = std::chrono::steady_clock::now();
    res.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  return res;
}

RunResult run_online(const TabularMdp& env, const json& agent_spec, std::uint64_t seed,
                     const RunOptions& opts) {
  auto agent = make_agent(agent_spec, env, opts.K, seed);
  auto backend = make_backend(opts.backend, env, seed, opts.K);
  RunResult res = run_online(env, *agent, *backend, opts);
  res.seed = seed;
  return res;
}

PacSample pac_extract(const RunResult& run, const TabularMdp& env, std::uint64_t seed) {
  if (run.epoch_policies.empty())
    throw std::logic_error("pac_extract: run was not recorded with epoch policies");
  RandomStream rs(derive_seed(seed, StreamPurpose::pac_extract));
  PacSample out;
  out.k = rs.uniform_int(run.K) + 1;
  // last epoch whose first episode is <= k
  const EpochPolicyRecord* rec = &run.epoch_policies.front();
  for (const auto& e : run.epoch_policies) {
    if (e.first_episode > out.k) break;
    rec = &e;
  }
  out.suboptimality = run.v_star_start_mean - rec->v_pi_start_mean;
  if (out.suboptimality < 0.0) out.suboptimality = 0.0;
  (void)env;
  return out;
}

}  // namespace regretlab
