#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace regretlab {

// Finite-horizon tabular MDP, time-inhomogeneous: transitions and rewards are
// indexed by layer h = 1..H. Cost-mode instances store *negated* costs, so a
// single planner code path covers both objectives; reward supports live in
// [0,H] for reward mode and [-H,0] for cost mode.

enum class RewardMode { reward, cost };

struct RewardSpec {
  enum class Kind { deterministic, scaled_bernoulli };

  Kind kind = Kind::deterministic;
  double mean_value = 0.0;    // deterministic
  double success_prob = 0.0;  // scaled_bernoulli
  double magnitude = 0.0;     // scaled_bernoulli payoff (signed; negative in cost mode)

  static RewardSpec det(double v) {
    RewardSpec r;
    r.kind = Kind::deterministic;
    r.mean_value = v;
    return r;
  }
  static RewardSpec bernoulli(double p, double mag) {
    RewardSpec r;
    r.kind = Kind::scaled_bernoulli;
    r.success_prob = p;
    r.magnitude = mag;
    return r;
  }

  double mean() const {
    return kind == Kind::deterministic ? mean_value : success_prob * magnitude;
  }
  double variance() const {
    if (kind == Kind::deterministic) return 0.0;
    return magnitude * magnitude * success_prob * (1.0 - success_prob);
  }
  double support_lo() const {
    if (kind == Kind::deterministic) return mean_value;
    return magnitude < 0.0 ? magnitude : 0.0;
  }
  double support_hi() const {
    if (kind == Kind::deterministic) return mean_value;
    return magnitude > 0.0 ? magnitude : 0.0;
  }
  // whether realizing a sample consumes a uniform draw; must be a pure
  // function of the spec so both sampling backends agree on stream positions
  bool consumes_draw() const { return kind == Kind::scaled_bernoulli; }
  double sample(double u) const {
    if (kind == Kind::deterministic) return mean_value;
    return u < success_prob ? magnitude : 0.0;
  }

  bool operator==(const RewardSpec&) const = default;
};

struct Policy {
  int H = 0, S = 0;
  std::vector<int> a;  // [h-1][s]

  Policy() = default;
  Policy(int H_, int S_) : H(H_), S(S_), a(static_cast<size_t>(H_) * S_, 0) {}

  int& at(int h, int s) { return a[static_cast<size_t>(h - 1) * S + s]; }
  int at(int h, int s) const { return a[static_cast<size_t>(h - 1) * S + s]; }

  bool operator==(const Policy&) const = default;
};

// V over layers 1..H+1 (row H+1 kept explicitly and identically zero),
// Q over layers 1..H.
struct ValueTable {
  int H = 0, S = 0, A = 0;
  std::vector<double> v;  // (H+1) x S
  std::vector<double> q;  // H x S x A

  ValueTable() = default;
  ValueTable(int H_, int S_, int A_)
      : H(H_), S(S_), A(A_),
        v(static_cast<size_t>(H_ + 1) * S_, 0.0),
        q(static_cast<size_t>(H_) * S_ * A_, 0.0) {}

  double& V(int h, int s) { return v[static_cast<size_t>(h - 1) * S + s]; }
  double V(int h, int s) const { return v[static_cast<size_t>(h - 1) * S + s]; }
  double& Q(int h, int s, int a) {
    return q[(static_cast<size_t>(h - 1) * S + s) * A + a];
  }
  double Q(int h, int s, int a) const {
    return q[(static_cast<size_t>(h - 1) * S + s) * A + a];
  }
};

struct ValidationIssue {
  std::string check;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  std::vector<std::string> notes;

  bool ok() const { return issues.empty(); }
  std::string to_string() const;
};

struct TabularMdp {
  int S = 0, A = 0, H = 0;
  RewardMode mode = RewardMode::reward;
  std::vector<double> P;       // H x S x A x S, row-major
  std::vector<RewardSpec> R;   // H x S x A
  std::vector<double> mu;      // S
  nlohmann::json metadata;     // free-form: name / family / params

  TabularMdp() = default;
  TabularMdp(int S_, int A_, int H_, RewardMode m = RewardMode::reward)
      : S(S_), A(A_), H(H_), mode(m),
        P(static_cast<size_t>(H_) * S_ * A_ * S_, 0.0),
        R(static_cast<size_t>(H_) * S_ * A_),
        mu(S_, 0.0) {}

  size_t ridx(int h, int s, int a) const {
    return (static_cast<size_t>(h - 1) * S + s) * A + a;
  }
  size_t pidx(int h, int s, int a, int s2) const {
    return ridx(h, s, a) * S + s2;
  }
  double* row(int h, int s, int a) { return P.data() + pidx(h, s, a, 0); }
  const double* row(int h, int s, int a) const {
    return P.data() + pidx(h, s, a, 0);
  }
  RewardSpec& reward(int h, int s, int a) { return R[ridx(h, s, a)]; }
  const RewardSpec& reward(int h, int s, int a) const { return R[ridx(h, s, a)]; }

  std::string name() const {
    if (metadata.contains("name") && metadata["name"].is_string())
      return metadata["name"].get<std::string>();
    return "mdp";
  }
  // instances violating the conservative bounded-total-reward check must
  // carry this flag in metadata to validate
  bool assume_bounded_total_reward() const {
    return metadata.value("assume_bounded_total_reward", false);
  }
};

ValidationReport validate(const TabularMdp& m);

// throws std::invalid_argument with the first issue when validation fails
void require_valid(const TabularMdp& m);

}  // namespace regretlab
