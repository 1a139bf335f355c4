#include "hemix/schema.hpp"

#include "schema_json.hpp"

namespace hemix {

using nlohmann::json;

const char* to_string(FeatureGroup g) {
    switch (g) {
        case FeatureGroup::kUser: return "USER";
        case FeatureGroup::kItem: return "ITEM";
        case FeatureGroup::kCross: return "CROSS";
    }
    return "?";
}

FeatureGroup feature_group_from_string(const std::string& s) {
    if (s == "USER") return FeatureGroup::kUser;
    if (s == "ITEM") return FeatureGroup::kItem;
    if (s == "CROSS") return FeatureGroup::kCross;
    throw ConfigError("unknown feature group '" + s + "' (expected USER, ITEM or CROSS)");
}

int FeatureSchema::ns_embed_dim() const {
    int d = 0;
    for (const auto& f : ns_fields) d += f.embed_dim;
    return d;
}

int FeatureSchema::seq_item_dim() const {
    int d = 0;
    for (const auto& f : seq_fields) d += f.embed_dim;
    return d;
}

void FeatureSchema::validate() const {
    if (ns_fields.empty()) throw ConfigError("schema: at least one non-sequential field required");
    for (const auto& f : ns_fields) {
        if (f.vocab_size < 1 || f.embed_dim < 1)
            throw ConfigError("schema: field '" + f.name + "' needs vocab_size >= 1 and embed_dim >= 1");
    }
    // Fields must stay in group-block order (USER, ITEM, CROSS) so that the
    // concatenated embedding layout round-trips through JSON unchanged.
    for (size_t i = 1; i < ns_fields.size(); ++i) {
        if (static_cast<int>(ns_fields[i].group) < static_cast<int>(ns_fields[i - 1].group))
            throw ConfigError("schema: non-sequential fields must be ordered USER, ITEM, CROSS");
    }
    for (const auto& f : seq_fields) {
        if (f.vocab_size < 1 || f.embed_dim < 1)
            throw ConfigError("schema: sequence field '" + f.name + "' needs vocab_size >= 1 and embed_dim >= 1");
    }
    if (global_max_len < 0 || realtime_max_len < 0)
        throw ConfigError("schema: sequence max lengths must be >= 0");
    if ((global_max_len > 0 || realtime_max_len > 0) && seq_fields.empty())
        throw ConfigError("schema: sequences configured but no sequence fields given");
}

namespace {

json field_to_json(const FieldSpec& f) {
    return json{{"name", f.name}, {"vocab_size", f.vocab_size}, {"embed_dim", f.embed_dim}};
}

FieldSpec field_from_json(const json& j, FeatureGroup g) {
    FieldSpec f;
    f.name = j.at("name").get<std::string>();
    f.group = g;
    f.vocab_size = j.at("vocab_size").get<int>();
    f.embed_dim = j.at("embed_dim").get<int>();
    return f;
}

}  // namespace

json schema_to_parsed_json(const FeatureSchema& s) {
    json groups = json::array();
    for (FeatureGroup g : {FeatureGroup::kUser, FeatureGroup::kItem, FeatureGroup::kCross}) {
        json fields = json::array();
        for (const auto& f : s.ns_fields)
            if (f.group == g) fields.push_back(field_to_json(f));
        if (!fields.empty()) groups.push_back(json{{"group", to_string(g)}, {"fields", fields}});
    }
    json seq = json::array();
    for (const auto& f : s.seq_fields) seq.push_back(field_to_json(f));
    return json{{"groups", groups},
                {"seq_fields", seq},
                {"global_max_len", s.global_max_len},
                {"realtime_max_len", s.realtime_max_len}};
}

std::string FeatureSchema::to_json() const { return schema_to_parsed_json(*this).dump(); }

FeatureSchema schema_from_parsed_json(const json& j) {
    FeatureSchema s;
    for (const auto& grp : j.at("groups")) {
        const FeatureGroup g = feature_group_from_string(grp.at("group").get<std::string>());
        for (const auto& f : grp.at("fields")) s.ns_fields.push_back(field_from_json(f, g));
    }
    for (const auto& f : j.at("seq_fields"))
        s.seq_fields.push_back(field_from_json(f, FeatureGroup::kItem));
    s.global_max_len = j.at("global_max_len").get<int>();
    s.realtime_max_len = j.at("realtime_max_len").get<int>();
    s.validate();
    return s;
}

FeatureSchema FeatureSchema::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("schema: invalid JSON: ") + e.what());
    }
    try {
        return schema_from_parsed_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("schema: ") + e.what());
    }
}

void validate_sample(const Sample& s, const FeatureSchema& schema) {
    if (s.ns_ids.size() != schema.ns_fields.size())
        throw InputError("sample has " + std::to_string(s.ns_ids.size()) + " ns ids, schema has " +
                         std::to_string(schema.ns_fields.size()) + " fields");
    for (size_t i = 0; i < s.ns_ids.size(); ++i) {
        if (s.ns_ids[i] >= static_cast<uint32_t>(schema.ns_fields[i].vocab_size))
            throw InputError("id " + std::to_string(s.ns_ids[i]) + " out of vocabulary for field '" +
                             schema.ns_fields[i].name + "'");
    }
    const size_t nsf = schema.seq_fields.size();
    auto check_seq = [&](const std::vector<uint32_t>& ids, int len, int max_len, const char* which) {
        if (len < 0 || len > max_len)
            throw InputError(std::string(which) + " sequence length " + std::to_string(len) +
                             " exceeds max " + std::to_string(max_len));
        if (ids.size() != nsf * static_cast<size_t>(len))
            throw InputError(std::string(which) + " sequence id count does not match length");
        for (size_t e = 0; e < static_cast<size_t>(len); ++e) {
            for (size_t f = 0; f < nsf; ++f) {
                const uint32_t id = ids[e * nsf + f];
                if (id >= static_cast<uint32_t>(schema.seq_fields[f].vocab_size))
                    throw InputError("id " + std::to_string(id) + " out of vocabulary for sequence field '" +
                                     schema.seq_fields[f].name + "'");
            }
        }
    };
    check_seq(s.global_ids, s.global_len, schema.global_max_len, "global");
    check_seq(s.realtime_ids, s.realtime_len, schema.realtime_max_len, "realtime");
    if (s.label > 1) throw InputError("label must be 0 or 1");
}

}  // namespace hemix
