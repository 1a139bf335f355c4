#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "hemix/model_config.hpp"
#include "hemix/synthetic.hpp"

namespace hemix {

// {"schema": ..., "model": ..., "training": ...}; inverse of
// model_config_from_json. Unknown keys are rejected so typos fail loudly.
nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& doc);

// Reads "synthetic" plus "schema"; when no schema section is present the
// canonical synthetic schema is derived from the spec.
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& doc);

struct SweepPoint {
    std::string name;
    std::vector<std::string> overrides;  // "dotted.key=value"
};

// One structured config file drives every subcommand. Flag overrides take
// precedence over the file, which takes precedence over defaults.
class HarnessConfig {
public:
    HarnessConfig() : doc_(nlohmann::json::object()) {}

    static HarnessConfig load_file(const std::string& path);
    static HarnessConfig from_text(const std::string& text);

    void apply_override(const std::string& key_eq_value);  // "model.token_dim=64"
    void set_value(const std::string& dotted_key, const nlohmann::json& value);

    ModelConfig model_config() const;
    SyntheticSpec synthetic_spec() const;
    std::vector<uint64_t> ablate_seeds() const;  // default {1, 2, 3}
    std::vector<SweepPoint> sweep_points() const;

    std::string dump(int indent = -1) const { return doc_.dump(indent); }
    const nlohmann::json& doc() const { return doc_; }

private:
    nlohmann::json doc_;
};

}  // namespace hemix
