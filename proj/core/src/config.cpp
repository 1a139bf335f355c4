#include "hemix/config.hpp"

#include <fstream>

#include "schema_json.hpp"

namespace hemix {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const char* section, std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok)
            throw ConfigError(std::string("config: unknown key '") + key + "' in section '" +
                              section + "'");
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

}  // namespace

json model_config_to_json(const ModelConfig& cfg) {
    json model{{"ns_token_count", cfg.ns_token_count},
               {"token_dim", cfg.token_dim},
               {"attn_dim", cfg.attn_dim},
               {"attn_heads", cfg.attn_heads},
               {"mix_heads", cfg.mix_heads},
               {"num_blocks", cfg.num_blocks},
               {"ffn_expansion", cfg.ffn_expansion},
               {"low_rank_dim", cfg.low_rank_dim},
               {"fixed_queries_global", cfg.fixed_queries_global},
               {"fixed_queries_realtime", cfg.fixed_queries_realtime},
               {"ns_hidden_dims", cfg.ns_hidden_dims},
               {"head_hidden_dims", cfg.head_hidden_dims},
               {"layer_norm_eps", cfg.layer_norm_eps},
               {"ablation",
                json{{"no_fixed_query", cfg.ablation.no_fixed_query},
                     {"autosplit_tokenizer", cfg.ablation.autosplit_tokenizer},
                     {"self_attention_blocks", cfg.ablation.self_attention_blocks}}}};
    json training{{"batch_size", cfg.training.batch_size},
                  {"learning_rate", cfg.training.learning_rate},
                  {"steps", cfg.training.steps},
                  {"seed", cfg.training.seed},
                  {"threads", cfg.training.threads}};
    return json{{"schema", schema_to_parsed_json(cfg.schema)},
                {"model", model},
                {"training", training}};
}

ModelConfig model_config_from_json(const json& doc) {
    ModelConfig cfg;
    if (!doc.contains("schema")) throw ConfigError("config: missing 'schema' section");
    cfg.schema = schema_from_parsed_json(doc.at("schema"));

    if (doc.contains("model")) {
        const json& m = doc.at("model");
        check_keys(m, "model",
                   {"ns_token_count", "token_dim", "attn_dim", "attn_heads", "mix_heads",
                    "num_blocks", "ffn_expansion", "low_rank_dim", "fixed_queries_global",
                    "fixed_queries_realtime", "ns_hidden_dims", "head_hidden_dims",
                    "layer_norm_eps", "ablation"});
        cfg.ns_token_count = get_or(m, "ns_token_count", cfg.ns_token_count);
        cfg.token_dim = get_or(m, "token_dim", cfg.token_dim);
        cfg.attn_dim = get_or(m, "attn_dim", cfg.attn_dim);
        cfg.attn_heads = get_or(m, "attn_heads", cfg.attn_heads);
        cfg.mix_heads = get_or(m, "mix_heads", cfg.mix_heads);
        cfg.num_blocks = get_or(m, "num_blocks", cfg.num_blocks);
        cfg.ffn_expansion = get_or(m, "ffn_expansion", cfg.ffn_expansion);
        cfg.low_rank_dim = get_or(m, "low_rank_dim", cfg.low_rank_dim);
        cfg.fixed_queries_global = get_or(m, "fixed_queries_global", cfg.fixed_queries_global);
        cfg.fixed_queries_realtime = get_or(m, "fixed_queries_realtime", cfg.fixed_queries_realtime);
        cfg.ns_hidden_dims = get_or(m, "ns_hidden_dims", cfg.ns_hidden_dims);
        cfg.head_hidden_dims = get_or(m, "head_hidden_dims", cfg.head_hidden_dims);
        cfg.layer_norm_eps = get_or(m, "layer_norm_eps", cfg.layer_norm_eps);
        if (m.contains("ablation")) {
            const json& a = m.at("ablation");
            check_keys(a, "model.ablation",
                       {"no_fixed_query", "autosplit_tokenizer", "self_attention_blocks"});
            cfg.ablation.no_fixed_query = get_or(a, "no_fixed_query", false);
            cfg.ablation.autosplit_tokenizer = get_or(a, "autosplit_tokenizer", false);
            cfg.ablation.self_attention_blocks = get_or(a, "self_attention_blocks", false);
        }
    }
    if (doc.contains("training")) {
        const json& t = doc.at("training");
        check_keys(t, "training", {"batch_size", "learning_rate", "steps", "seed", "threads"});
        cfg.training.batch_size = get_or(t, "batch_size", cfg.training.batch_size);
        cfg.training.learning_rate = get_or(t, "learning_rate", cfg.training.learning_rate);
        cfg.training.steps = get_or(t, "steps", cfg.training.steps);
        cfg.training.seed = get_or(t, "seed", cfg.training.seed);
        cfg.training.threads = get_or(t, "threads", cfg.training.threads);
    }
    cfg.validate();
    return cfg;
}

SyntheticSpec synthetic_spec_from_json(const json& doc) {
    SyntheticSpec spec;
    int global_max_len = 64, realtime_max_len = 8;
    if (doc.contains("synthetic")) {
        const json& s = doc.at("synthetic");
        check_keys(s, "synthetic",
                   {"n_users", "n_items", "mean_global_len", "mean_rt_len", "n_train", "n_test",
                    "seed", "planted", "global_max_len", "realtime_max_len"});
        spec.n_users = get_or(s, "n_users", spec.n_users);
        spec.n_items = get_or(s, "n_items", spec.n_items);
        spec.mean_global_len = get_or(s, "mean_global_len", spec.mean_global_len);
        spec.mean_rt_len = get_or(s, "mean_rt_len", spec.mean_rt_len);
        spec.n_train = get_or(s, "n_train", spec.n_train);
        spec.n_test = get_or(s, "n_test", spec.n_test);
        spec.seed = get_or(s, "seed", spec.seed);
        global_max_len = get_or(s, "global_max_len", global_max_len);
        realtime_max_len = get_or(s, "realtime_max_len", realtime_max_len);
        if (s.contains("planted")) {
            const json& p = s.at("planted");
            check_keys(p, "synthetic.planted",
                       {"user_latent_dim", "interest_weight", "recency_weight", "affinity_weight",
                        "population_weight", "noise_scale", "bias"});
            spec.planted.user_latent_dim = get_or(p, "user_latent_dim", spec.planted.user_latent_dim);
            spec.planted.interest_weight = get_or(p, "interest_weight", spec.planted.interest_weight);
            spec.planted.recency_weight = get_or(p, "recency_weight", spec.planted.recency_weight);
            spec.planted.affinity_weight = get_or(p, "affinity_weight", spec.planted.affinity_weight);
            spec.planted.population_weight =
                get_or(p, "population_weight", spec.planted.population_weight);
            spec.planted.noise_scale = get_or(p, "noise_scale", spec.planted.noise_scale);
            spec.planted.bias = get_or(p, "bias", spec.planted.bias);
        }
    }
    if (doc.contains("schema")) {
        spec.schema = schema_from_parsed_json(doc.at("schema"));
    } else {
        spec.schema =
            canonical_synthetic_schema(spec.n_users, spec.n_items, global_max_len, realtime_max_len);
    }
    spec.validate();
    return spec;
}

HarnessConfig HarnessConfig::load_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    try {
        HarnessConfig cfg;
        cfg.doc_ = json::parse(text);
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
}

HarnessConfig HarnessConfig::from_text(const std::string& text) {
    try {
        HarnessConfig cfg;
        cfg.doc_ = json::parse(text);
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config text is not valid JSON: ") + e.what());
    }
}

void HarnessConfig::set_value(const std::string& dotted_key, const json& value) {
    json* cur = &doc_;
    size_t start = 0;
    while (true) {
        const size_t dot = dotted_key.find('.', start);
        const std::string part = dotted_key.substr(start, dot - start);
        if (part.empty()) throw ConfigError("override: empty key segment in '" + dotted_key + "'");
        if (dot == std::string::npos) {
            (*cur)[part] = value;
            return;
        }
        if (!cur->contains(part) || !(*cur)[part].is_object()) (*cur)[part] = json::object();
        cur = &(*cur)[part];
        start = dot + 1;
    }
}

void HarnessConfig::apply_override(const std::string& key_eq_value) {
    const size_t eq = key_eq_value.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like KEY=VALUE, got '" + key_eq_value + "'");
    const std::string key = key_eq_value.substr(0, eq);
    const std::string raw = key_eq_value.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);  // numbers, bools, arrays, quoted strings
    } catch (const json::exception&) {
        value = raw;  // bare strings
    }
    set_value(key, value);
}

ModelConfig HarnessConfig::model_config() const { return model_config_from_json(doc_); }

SyntheticSpec HarnessConfig::synthetic_spec() const { return synthetic_spec_from_json(doc_); }

std::vector<uint64_t> HarnessConfig::ablate_seeds() const {
    if (doc_.contains("ablate") && doc_.at("ablate").contains("seeds")) {
        try {
            return doc_.at("ablate").at("seeds").get<std::vector<uint64_t>>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config: ablate.seeds: ") + e.what());
        }
    }
    return {1, 2, 3};
}

std::vector<SweepPoint> HarnessConfig::sweep_points() const {
    std::vector<SweepPoint> out;
    if (!doc_.contains("sweep")) return out;
    const json& sweep = doc_.at("sweep");
    if (!sweep.is_array()) throw ConfigError("config: 'sweep' must be an array of points");
    int idx = 0;
    for (const json& p : sweep) {
        SweepPoint point;
        point.name = "point" + std::to_string(idx++);
        for (const auto& [key, value] : p.items()) {
            if (key == "name") {
                point.name = value.get<std::string>();
                continue;
            }
            point.overrides.push_back(key + "=" + value.dump());
        }
        out.push_back(std::move(point));
    }
    return out;
}

}  // namespace hemix
