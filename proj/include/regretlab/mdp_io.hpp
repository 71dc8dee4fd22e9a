#pragma once

#include <string>

#include <json.hpp>

#include "regretlab/mdp.hpp"

namespace regretlab {

inline constexpr const char* kMdpSchemaVersion = "regret-lab-mdp/1";

nlohmann::json mdp_to_json(const TabularMdp& m);

// parses, checks the schema version, validates; throws std::runtime_error
// (version/shape) or std::invalid_argument (validation) on failure
TabularMdp mdp_from_json(const nlohmann::json& j);

void save_mdp(const TabularMdp& m, const std::string& path);
TabularMdp load_mdp(const std::string& path);

}  // namespace regretlab
