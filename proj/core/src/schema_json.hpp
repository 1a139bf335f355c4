#pragma once

#include <json.hpp>

#include "hemix/schema.hpp"

// Internal helpers shared by config and dataset I/O so the schema has one
// JSON shape everywhere.
namespace hemix {
nlohmann::json schema_to_parsed_json(const FeatureSchema& s);
FeatureSchema schema_from_parsed_json(const nlohmann::json& j);
}  // namespace hemix
