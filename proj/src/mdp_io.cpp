#include "regretlab/mdp_io.hpp"

#include <fstream>
#include <stdexcept>

namespace regretlab {

using nlohmann::json;

namespace {

json reward_to_json(const RewardSpec& r) {
  if (r.kind == RewardSpec::Kind::deterministic)
    return json{{"kind", "deterministic"}, {"params", {{"mean", r.mean_value}}}};
  return json{{"kind", "scaled_bernoulli"},
              {"params", {{"success_prob", r.success_prob}, {"magnitude", r.magnitude}}}};
}

RewardSpec reward_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  const json& p = j.at("params");
  if (kind == "deterministic") return RewardSpec::det(p.at("mean").get<double>());
  if (kind == "scaled_bernoulli")
    return RewardSpec::bernoulli(p.at("success_prob").get<double>(),
                                 p.at("magnitude").get<double>());
  throw std::runtime_error("unknown reward kind: " + kind);
}

}  // namespace

json mdp_to_json(const TabularMdp& m) {
  json j;
  j["version"] = kMdpSchemaVersion;
  j["mode"] = m.mode == RewardMode::reward ? "reward" : "cost";
  j["S"] = m.S;
  j["A"] = m.A;
  j["H"] = m.H;
  j["init_dist"] = m.mu;

  json trans = json::array();
  for (int h = 1; h <= m.H; ++h) {
    json lh = json::array();
    for (int s = 0; s < m.S; ++s) {
      json ls = json::array();
      for (int a = 0; a < m.A; ++a) {
        const double* p = m.row(h, s, a);
        ls.push_back(std::vector<double>(p, p + m.S));
      }
      lh.push_back(std::move(ls));
    }
    trans.push_back(std::move(lh));
  }
  j["transitions"] = std::move(trans);

  json rew = json::array();
  for (int h = 1; h <= m.H; ++h) {
    json lh = json::array();
    for (int s = 0; s < m.S; ++s) {
      json ls = json::array();
      for (int a = 0; a < m.A; ++a) ls.push_back(reward_to_json(m.reward(h, s, a)));
      lh.push_back(std::move(ls));
    }
    rew.push_back(std::move(lh));
  }
  j["rewards"] = std::move(rew);

  j["metadata"] = m.metadata.is_null() ? json::object() : m.metadata;
  return j;
}

TabularMdp mdp_from_json(const json& j) {
  const std::string ver = j.value("version", "");
  if (ver != kMdpSchemaVersion)
    throw std::runtime_error("mdp schema version mismatch: got '" + ver + "', want '" +
                             kMdpSchemaVersion + "'");

  const int S = j.at("S").get<int>();
  const int A = j.at("A").get<int>();
  const int H = j.at("H").get<int>();
  const std::string mode_s = j.at("mode").get<std::string>();
  if (mode_s != "reward" && mode_s != "cost")
    throw std::runtime_error("mdp mode must be 'reward' or 'cost'");
  if (S < 1 || A < 1 || H < 1) throw std::runtime_error("mdp dims must be positive");

  TabularMdp m(S, A, H, mode_s == "reward" ? RewardMode::reward : RewardMode::cost);
  m.mu = j.at("init_dist").get<std::vector<double>>();
  if (m.mu.size() != static_cast<size_t>(S))
    throw std::runtime_error("init_dist length != S");

  const json& trans = j.at("transitions");
  const json& rew = j.at("rewards");
  if (trans.size() != static_cast<size_t>(H) || rew.size() != static_cast<size_t>(H))
    throw std::runtime_error("transitions/rewards must have H layers");
  for (int h = 1; h <= H; ++h) {
    const json& th = trans[h - 1];
    const json& rh = rew[h - 1];
    if (th.size() != static_cast<size_t>(S) || rh.size() != static_cast<size_t>(S))
      throw std::runtime_error("layer arrays must have S rows");
    for (int s = 0; s < S; ++s) {
      if (th[s].size() != static_cast<size_t>(A) || rh[s].size() != static_cast<size_t>(A))
        throw std::runtime_error("state arrays must have A entries");
      for (int a = 0; a < A; ++a) {
        const auto row = th[s][a].get<std::vector<double>>();
        if (row.size() != static_cast<size_t>(S))
          throw std::runtime_error("transition row length != S");
        std::copy(row.begin(), row.end(), m.row(h, s, a));
        m.reward(h, s, a) = reward_from_json(rh[s][a]);
      }
    }
  }
  m.metadata = j.value("metadata", json::object());

  require_valid(m);
  return m;
}

void save_mdp(const TabularMdp& m, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for write: " + path);
  f << mdp_to_json(m).dump(2) << "\n";
  if (!f) throw std::runtime_error("write failed: " + path);
}

TabularMdp load_mdp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("parse error in " + path + ": " + e.what());
  }
  return mdp_from_json(j);
}

}  // namespace regretlab
