#include "regretlab/planner.hpp"

#include <cmath>
#include <stdexcept>

namespace regretlab {

namespace {

using accum_t = long double;

// kernels run parallel only past this state count; below it the OpenMP
// region entry costs more than the sweep
constexpr int kParallelMinStates = 64;

inline accum_t dot(const double* p, const accum_t* v, int n) {
  accum_t s = 0.0L;
  for (int i = 0; i < n; ++i) s += static_cast<accum_t>(p[i]) * v[i];
  return s;
}

// one state's greedy backup at layer h; writes q row and returns argmax
inline accum_t backup_state_max(const TabularMdp& m, int h, int s,
                                const accum_t* v_next, accum_t* q_row,
                                int* argmax_out) {
  accum_t best = 0.0L;
  int best_a = 0;
  for (int a = 0; a < m.A; ++a) {
    const accum_t q =
        static_cast<accum_t>(m.reward(h, s, a).mean()) + dot(m.row(h, s, a), v_next, m.S);
    q_row[a] = q;
    if (a == 0 || q > best) {
      best = q;
      best_a = a;
    }
  }
  if (argmax_out) *argmax_out = best_a;
  return best;
}

struct LdTables {
  int H, S, A;
  std::vector<accum_t> v;  // (H+1) x S
  std::vector<accum_t> q;  // H x S x A

  LdTables(int H_, int S_, int A_)
      : H(H_), S(S_), A(A_),
        v(static_cast<size_t>(H_ + 1) * S_, 0.0L),
        q(static_cast<size_t>(H_) * S_ * A_, 0.0L) {}

  accum_t* vrow(int h) { return v.data() + static_cast<size_t>(h - 1) * S; }
  accum_t* qrow(int h, int s) {
    return q.data() + (static_cast<size_t>(h - 1) * S + s) * A;
  }

  void export_to(ValueTable& out) const {
    out = ValueTable(H, S, A);
    for (size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<double>(v[i]);
    for (size_t i = 0; i < q.size(); ++i) out.q[i] = static_cast<double>(q[i]);
  }
};

enum class BackupKind { greedy, fixed_policy, uniform };

void sweep(const TabularMdp& m, BackupKind kind, const Policy* pi_in, Exec ex,
           LdTables& t, Policy* pi_out) {
  for (int h = m.H; h >= 1; --h) {
    const accum_t* v_next = t.vrow(h + 1);
    accum_t* v_here = t.vrow(h);
    auto body = [&](int s) {
      accum_t* q_row = t.qrow(h, s);
      switch (kind) {
        case BackupKind::greedy: {
          int a_star = 0;
          v_here[s] = backup_state_max(m, h, s, v_next, q_row, &a_star);
          if (pi_out) pi_out->at(h, s) = a_star;
          break;
        }
        case BackupKind::fixed_policy: {
          for (int a = 0; a < m.A; ++a)
            q_row[a] = static_cast<accum_t>(m.reward(h, s, a).mean()) +
                       dot(m.row(h, s, a), v_next, m.S);
          v_here[s] = q_row[pi_in->at(h, s)];
          break;
        }
        case BackupKind::uniform: {
          accum_t acc = 0.0L;
          for (int a = 0; a < m.A; ++a) {
            q_row[a] = static_cast<accum_t>(m.reward(h, s, a).mean()) +
                       dot(m.row(h, s, a), v_next, m.S);
            acc += q_row[a];
          }
          v_here[s] = acc / static_cast<accum_t>(m.A);
          break;
        }
      }
    };
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(static) if (m.S >= kParallelMinStates)
      for (int s = 0; s < m.S; ++s) body(s);
    } else {
      for (int s = 0; s < m.S; ++s) body(s);
    }
  }
}

}  // namespace

PlanResult bellman_optimal(const TabularMdp& m, Exec ex) {
  require_valid(m);
  PlanResult res;
  res.pi = Policy(m.H, m.S);
  LdTables t(m.H, m.S, m.A);
  sweep(m, BackupKind::greedy, nullptr, ex, t, &res.pi);
  t.export_to(res.vt);
  return res;
}

ValueTable policy_eval(const TabularMdp& m, const Policy& pi, Exec ex) {
  require_valid(m);
  if (pi.H != m.H || pi.S != m.S)
    throw std::invalid_argument("policy_eval: policy shape mismatch");
  for (int x : pi.a)
    if (x < 0 || x >= m.A) throw std::invalid_argument("policy_eval: action out of range");
  LdTables t(m.H, m.S, m.A);
  sweep(m, BackupKind::fixed_policy, &pi, ex, t, nullptr);
  ValueTable out;
  t.export_to(out);
  return out;
}

ValueTable uniform_policy_eval(const TabularMdp& m, Exec ex) {
  require_valid(m);
  LdTables t(m.H, m.S, m.A);
  sweep(m, BackupKind::uniform, nullptr, ex, t, nullptr);
  ValueTable out;
  t.export_to(out);
  return out;
}

bool brute_force_feasible(const TabularMdp& m, std::uint64_t policy_cap,
                          std::uint64_t* count_out) {
  std::uint64_t n = 1;
  const std::uint64_t cells = static_cast<std::uint64_t>(m.S) * m.H;
  for (std::uint64_t i = 0; i < cells; ++i) {
    if (n > policy_cap / static_cast<std::uint64_t>(m.A)) return false;
    n *= static_cast<std::uint64_t>(m.A);
  }
  if (n > policy_cap) return false;
  if (count_out) *count_out = n;
  return true;
}

PlanResult brute_force_plan(const TabularMdp& m, std::uint64_t policy_cap) {
  require_valid(m);
  std::uint64_t n_pol = 0;
  if (!brute_force_feasible(m, policy_cap, &n_pol))
    throw std::runtime_error("brute_force_plan: A^(S*H) exceeds policy cap");

  const size_t cells = static_cast<size_t>(m.S) * m.H;
  Policy pi(m.H, m.S);  // doubles as the odometer
  LdTables best(m.H, m.S, m.A);
  LdTables cur(m.H, m.S, m.A);
  bool first = true;

  for (std::uint64_t it = 0; it < n_pol; ++it) {
    sweep(m, BackupKind::fixed_policy, &pi, Exec::serial, cur, nullptr);
    if (first) {
      best.v = cur.v;
      best.q = cur.q;
      first = false;
    } else {
      for (size_t i = 0; i < best.v.size(); ++i)
        if (cur.v[i] > best.v[i]) best.v[i] = cur.v[i];
      for (size_t i = 0; i < best.q.size(); ++i)
        if (cur.q[i] > best.q[i]) best.q[i] = cur.q[i];
    }
    // advance odometer
    for (size_t c = 0; c < cells; ++c) {
      if (++pi.a[c] < m.A) break;
      pi.a[c] = 0;
    }
  }

  PlanResult res;
  best.export_to(res.vt);
  // greedy policy read off the maximized q table
  res.pi = Policy(m.H, m.S);
  for (int h = 1; h <= m.H; ++h)
    for (int s = 0; s < m.S; ++s) {
      int best_a = 0;
      for (int a = 1; a < m.A; ++a)
        if (res.vt.Q(h, s, a) > res.vt.Q(h, s, best_a)) best_a = a;
      res.pi.at(h, s) = best_a;
    }
  return res;
}

namespace detail {

void raw_bellman_optimal(int S, int A, int H, const std::vector<double>& P,
                         const std::vector<double>& r_mean, ValueTable& vt_out,
                         Policy* pi_out, Exec ex) {
  LdTables t(H, S, A);
  for (int h = H; h >= 1; --h) {
    const accum_t* v_next = t.vrow(h + 1);
    accum_t* v_here = t.vrow(h);
    auto body = [&](int s) {
      accum_t* q_row = t.qrow(h, s);
      accum_t best = 0.0L;
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        const size_t idx = (static_cast<size_t>(h - 1) * S + s) * A + a;
        const accum_t q =
            static_cast<accum_t>(r_mean[idx]) + dot(P.data() + idx * S, v_next, S);
        q_row[a] = q;
        if (a == 0 || q > best) {
          best = q;
          best_a = a;
        }
      }
      v_here[s] = best;
      if (pi_out) pi_out->at(h, s) = best_a;
    };
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(static) if (S >= kParallelMinStates)
      for (int s = 0; s < S; ++s) body(s);
    } else {
      for (int s = 0; s < S; ++s) body(s);
    }
  }
  t.export_to(vt_out);
}

}  // namespace detail

}  // namespace regretlab
