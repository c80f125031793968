#pragma once

#include "srhc/models.hpp"

#include "json.hpp"

#include <string>
#include <vector>

namespace srhc {

// Builds and validates a scenario from its declarative description. Throws
// ParseError naming the offending field, DimensionError or ValidationError.
Scenario build_scenario(const nlohmann::json& config);

Scenario parse_scenario(const std::string& text);
Scenario load_scenario_file(const std::string& path);

std::vector<std::string> builtin_names();
nlohmann::json builtin_config(const std::string& name);
Scenario builtin_scenario(const std::string& name);

// The declarative config the scenario was built from.
const nlohmann::json& scenario_to_json(const Scenario& s);

// Applies `key=value`. Keys are dotted paths into the config, or one of the
// aliases N, alpha, U_max, grid_points. Values are parsed as JSON when
// possible and kept as strings otherwise.
void apply_override(nlohmann::json& config, const std::string& assignment);

// Builtin name or path to a JSON file, plus overrides.
nlohmann::json resolve_scenario_config(const std::string& name_or_path, const std::vector<std::string>& overrides = {});

}  // namespace srhc
