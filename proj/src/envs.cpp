#include "regretlab/envs.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "regretlab/mdp_io.hpp"
#include "regretlab/rng.hpp"

namespace regretlab {

using nlohmann::json;

namespace {

std::string fmt_g(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

void finish(TabularMdp& m, const char* where) {
  ValidationReport rep = validate(m);
  if (!rep.ok())
    throw std::logic_error(std::string(where) + " produced an invalid instance: " +
                           rep.issues.front().detail);
}

// uniform simplex row via normalized exponentials; the float residual is
// folded onto the largest entry so row sums are exact to the last ulp
void simplex_row(RandomStream& rs, double* out, int n) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rs.uniform();
    out[i] = -std::log1p(-u);
    sum += out[i];
  }
  if (sum <= 0.0) {  // astronomically unlikely; keep deterministic anyway
    for (int i = 0; i < n; ++i) out[i] = 1.0 / n;
    return;
  }
  double s2 = 0.0;
  int arg = 0;
  for (int i = 0; i < n; ++i) {
    out[i] /= sum;
    s2 += out[i];
    if (out[i] > out[arg]) arg = i;
  }
  out[arg] += 1.0 - s2;
}

}  // namespace

TabularMdp gen_random(int S, int A, int H, std::uint64_t seed, double reward_density) {
  if (S < 1 || A < 1 || H < 1) throw std::invalid_argument("gen_random: bad dims");
  if (!(reward_density > 0.0) || reward_density > 1.0)
    throw std::invalid_argument("gen_random: reward_density must be in (0,1]");

  TabularMdp m(S, A, H, RewardMode::reward);
  {
    RandomStream rs(derive_seed(seed, StreamPurpose::env_build, 0));
    simplex_row(rs, m.mu.data(), S);
  }
  std::vector<double> raw(static_cast<size_t>(H) * S * A, 0.0);
  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const std::uint64_t flat = m.ridx(h, s, a);
        RandomStream rt(derive_seed(seed, StreamPurpose::env_build, 1, flat));
        simplex_row(rt, m.row(h, s, a), S);
        RandomStream rr(derive_seed(seed, StreamPurpose::env_build, 2, flat));
        if (rr.uniform() < reward_density) raw[flat] = rr.uniform();
      }

  // scale so that sum_h max_{s,a} r = H: the conservative check then passes
  // with no slack
  double total = 0.0;
  for (int h = 1; h <= H; ++h) {
    double worst = 0.0;
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) worst = std::max(worst, raw[m.ridx(h, s, a)]);
    total += worst;
  }
  const double scale = total > 0.0 ? H / total : 0.0;
  for (int h = 1; h <= H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        m.reward(h, s, a) = RewardSpec::det(raw[m.ridx(h, s, a)] * scale);

  std::ostringstream name;
  name << "random-S" << S << "-A" << A << "-H" << H << "-d" << fmt_g(reward_density)
       << "-seed" << seed;
  m.metadata = json{{"name", name.str()},
                    {"family", "random"},
                    {"params", {{"S", S}, {"A", A}, {"H", H},
                                {"reward_density", reward_density}, {"seed", seed}}}};
  finish(m, "gen_random");
  return m;
}

TabularMdp gen_jao(int H, double c1_const, int A) {
  if (A < 2) throw std::invalid_argument("gen_jao: A >= 2 required");
  if (!(c1_const > 0.0)) throw std::invalid_argument("gen_jao: c1_const must be > 0");
  if (H < c1_const + 1.0)
    throw std::invalid_argument("gen_jao: need H >= c1_const + 1 so delta + eps <= 1");

  const double delta = c1_const / H;
  const double eps = 1.0 / H;
  constexpr int x = 0, y = 1;

  TabularMdp m(2, A, H, RewardMode::reward);
  m.mu[x] = 1.0;
  for (int h = 1; h <= H; ++h)
    for (int a = 0; a < A; ++a) {
      // rows are [P(x), P(y)]. Every action in x, and action a (plus the
      // replicas) in y, moves to y with probability delta; only b = 1 in y
      // adds eps.
      double* px = m.row(h, x, a);
      px[x] = 1.0 - delta;
      px[y] = delta;
      double* py = m.row(h, y, a);
      const double up = (a == 1) ? delta + eps : delta;
      py[x] = 1.0 - up;
      py[y] = up;
      m.reward(h, x, a) = RewardSpec::det(0.0);
      m.reward(h, y, a) = RewardSpec::det(1.0);
    }

  std::ostringstream name;
  name << "jao-H" << H << "-A" << A << "-c" << fmt_g(c1_const);
  m.metadata = json{{"name", name.str()},
                    {"family", "jao"},
                    {"params", {{"H", H}, {"A", A}, {"c1_const", c1_const},
                                {"delta", delta}, {"eps", eps}}}};
  finish(m, "gen_jao");
  return m;
}

TabularMdp gen_hard_chain(int S, int A, int H, std::uint64_t seed) {
  if (S < 2 || S % 2 != 0)
    throw std::invalid_argument("gen_hard_chain: S must be even and >= 2");
  if (A < 1 || H < 1) throw std::invalid_argument("gen_hard_chain: bad dims");

  const int d = S / 2;  // chain i: live state 2i, dead state 2i+1
  TabularMdp m(S, A, H, RewardMode::reward);
  std::vector<std::vector<int>> astar(d, std::vector<int>(H, 0));
  for (int i = 0; i < d; ++i)
    for (int h = 1; h <= H; ++h) {
      RandomStream rs(derive_seed(seed, StreamPurpose::env_build, i, h));
      astar[i][h - 1] = static_cast<int>(rs.uniform_int(A));
    }

  for (int i = 0; i < d; ++i) {
    const int live = 2 * i, dead = 2 * i + 1;
    m.mu[live] = 1.0 / d;
    for (int h = 1; h <= H; ++h)
      for (int a = 0; a < A; ++a) {
        if (a == astar[i][h - 1]) {
          m.row(h, live, a)[live] = 1.0;
          m.reward(h, live, a) = RewardSpec::det(1.0);
        } else {
          m.row(h, live, a)[dead] = 1.0;
          m.reward(h, live, a) = RewardSpec::det(0.0);
        }
        m.row(h, dead, a)[dead] = 1.0;
        m.reward(h, dead, a) = RewardSpec::det(0.0);
      }
  }
  // float residual of 1/d summed d times
  {
    double s2 = 0.0;
    for (double v : m.mu) s2 += v;
    m.mu[0] += 1.0 - s2;
  }

  std::ostringstream name;
  name << "hardchain-S" << S << "-A" << A << "-H" << H << "-seed" << seed;
  m.metadata = json{{"name", name.str()},
                    {"family", "hardchain"},
                    {"params", {{"S", S}, {"A", A}, {"H", H}, {"seed", seed},
                                {"optimal_actions", astar}}}};
  finish(m, "gen_hard_chain");
  return m;
}

TabularMdp gen_branch_wrap_value(const TabularMdp& inner, double p) {
  if (!(p >= 0.0) || p > 1.0)
    throw std::invalid_argument("gen_branch_wrap_value: p must be in [0,1]");
  require_valid(inner);

  const int S = inner.S + 2;  // inner states, then start, then dumb sink
  const int start = inner.S, dumb = inner.S + 1;
  const int H = inner.H + 1;
  TabularMdp m(S, inner.A, H, inner.mode);
  m.mu[start] = 1.0;

  for (int a = 0; a < inner.A; ++a) {
    // layer 1: start branches into the inner initial distribution w.p. p
    double* row = m.row(1, start, a);
    double s2 = 0.0;
    for (int s = 0; s < inner.S; ++s) {
      row[s] = p * inner.mu[s];
      s2 += row[s];
    }
    row[dumb] = 1.0 - p;
    // fold the p*mu rounding residual onto the sink so the row is exact
    row[dumb] += (p - s2);
    m.reward(1, start, a) = RewardSpec::det(0.0);
    // layer 1 for non-start states never fires; make them self-loops
    for (int s = 0; s < inner.S; ++s) {
      m.row(1, s, a)[s] = 1.0;
      m.reward(1, s, a) = RewardSpec::det(0.0);
    }
    m.row(1, dumb, a)[dumb] = 1.0;
    m.reward(1, dumb, a) = RewardSpec::det(0.0);
  }

  for (int h = 2; h <= H; ++h)
    for (int a = 0; a < inner.A; ++a) {
      for (int s = 0; s < inner.S; ++s) {
        const double* prow = inner.row(h - 1, s, a);
        std::copy(prow, prow + inner.S, m.row(h, s, a));
        m.reward(h, s, a) = inner.reward(h - 1, s, a);
      }
      m.row(h, start, a)[dumb] = 1.0;
      m.reward(h, start, a) = RewardSpec::det(0.0);
      m.row(h, dumb, a)[dumb] = 1.0;
      m.reward(h, dumb, a) = RewardSpec::det(0.0);
    }

  std::ostringstream name;
  name << "branchwrap-p" << fmt_g(p) << "-" << inner.name();
  m.metadata = json{{"name", name.str()},
                    {"family", "branchwrap"},
                    {"params", {{"p", p}, {"inner", inner.metadata}}}};
  finish(m, "gen_branch_wrap_value");
  return m;
}

TabularMdp gen_cost_layered(int H, double p, int A, std::uint64_t seed) {
  if (H < 1 || A < 2) throw std::invalid_argument("gen_cost_layered: need H >= 1, A >= 2");
  if (!(p >= 0.0) || p > 0.25)
    throw std::invalid_argument("gen_cost_layered: p must be in [0, 1/4]");

  constexpr int live = 0, sink = 1;
  TabularMdp m(2, A, H, RewardMode::cost);
  m.mu[live] = 1.0;
  std::vector<int> astar(H, 0);
  for (int h = 1; h <= H; ++h) {
    RandomStream rs(derive_seed(seed, StreamPurpose::env_build, h));
    astar[h - 1] = static_cast<int>(rs.uniform_int(A));
  }
  for (int h = 1; h <= H; ++h)
    for (int a = 0; a < A; ++a) {
      if (a == astar[h - 1]) {
        m.row(h, live, a)[live] = 1.0;
        m.reward(h, live, a) = RewardSpec::det(-p);  // costs stored negated
      } else {
        m.row(h, live, a)[sink] = 1.0;
        m.reward(h, live, a) = RewardSpec::det(-1.0);
      }
      m.row(h, sink, a)[sink] = 1.0;
      m.reward(h, sink, a) = RewardSpec::det(0.0);
    }

  std::ostringstream name;
  name << "costlayer-H" << H << "-p" << fmt_g(p) << "-A" << A << "-seed" << seed;
  m.metadata = json{{"name", name.str()},
                    {"family", "costlayer"},
                    {"params", {{"H", H}, {"p", p}, {"A", A}, {"seed", seed},
                                {"optimal_actions", astar}}}};
  finish(m, "gen_cost_layered");
  return m;
}

TabularMdp make_env(const json& spec) {
  if (spec.contains("file")) return load_mdp(spec.at("file").get<std::string>());
  const std::string family = spec.at("family").get<std::string>();
  const json p = spec.value("params", json::object());
  if (family == "random")
    return gen_random(p.at("S").get<int>(), p.at("A").get<int>(), p.at("H").get<int>(),
                      p.value("seed", std::uint64_t{1}), p.value("reward_density", 0.5));
  if (family == "jao")
    return gen_jao(p.at("H").get<int>(), p.value("c1_const", 4.0), p.value("A", 2));
  if (family == "hardchain")
    return gen_hard_chain(p.at("S").get<int>(), p.at("A").get<int>(), p.at("H").get<int>(),
                          p.value("seed", std::uint64_t{1}));
  if (family == "branchwrap")
    return gen_branch_wrap_value(make_env(p.at("inner")), p.at("p").get<double>());
  if (family == "costlayer")
    return gen_cost_layered(p.at("H").get<int>(), p.at("p").get<double>(), p.value("A", 2),
                            p.value("seed", std::uint64_t{1}));
  throw std::invalid_argument("unknown env family: " + family);
}

}  // namespace regretlab
