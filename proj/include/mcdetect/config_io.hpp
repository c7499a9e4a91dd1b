#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "mcdetect/model.hpp"

namespace mcdetect::model {

/// Contents of a scenario JSON document: the physical system plus optional
/// simulation controls under the "simulation" key.
struct Scenario {
  SystemConfig system;
  std::optional<SimConfig> sim;

  bool operator==(const Scenario&) const = default;
};

/// Parses and validates. Unknown keys, wrong types and violated invariants are
/// all collected into a single ValidationError.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

nlohmann::json to_json(const SystemConfig& config);
nlohmann::json to_json(const SimConfig& sim);
nlohmann::json to_json(const Scenario& scenario);

}  // namespace mcdetect::model
