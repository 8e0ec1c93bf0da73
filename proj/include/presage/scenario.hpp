#ifndef PRESAGE_SCENARIO_HPP
#define PRESAGE_SCENARIO_HPP

#include <string>
#include <string_view>

#include "presage/engine.hpp"

namespace presage::scenario {

// Scenario files are key = value sections:
//   [seed] [run] [window] [tolerance] [messages] [topology] [prediction]
//   [workload] [fossil]
// Unknown sections or keys are rejected. Relative workload paths resolve
// against base_dir.
engine::ScenarioConfig parse_scenario(std::string_view text, const std::string& base_dir);
engine::ScenarioConfig load_scenario(const std::string& path);

// Applies a "section.key=value" override.
void apply_override(engine::ScenarioConfig& config, const std::string& assignment);

}  // namespace presage::scenario

#endif
