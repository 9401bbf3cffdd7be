#pragma once

#include <json.hpp>
#include <string>

#include "phasecost/costs.hpp"
#include "phasecost/phase_costs.hpp"

namespace phasecost::io {

using nlohmann::json;

json to_json(const TransportCost& tau);
TransportCost transport_cost_from_json(const json& j);

// step / sampled / analytic (power_law, urban_smooth) encodings of z
json to_json(const MassSpecificCost& z);
MassSpecificCost mass_specific_cost_from_json(const json& j);

inline json to_json(const PhaseFieldCost& c) { return to_json(c.z); }
inline PhaseFieldCost phase_field_cost_from_json(const json& j) { return {mass_specific_cost_from_json(j)}; }

// Accepts inline JSON text or a path to a JSON file.
json parse_json_arg(const std::string& text_or_path);
json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const json& j);

}  // namespace phasecost::io
