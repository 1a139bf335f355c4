#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hemix/errors.hpp"

namespace hemix {

enum class FeatureGroup { kUser, kItem, kCross };

const char* to_string(FeatureGroup g);
FeatureGroup feature_group_from_string(const std::string& s);

struct FieldSpec {
    std::string name;
    FeatureGroup group = FeatureGroup::kUser;
    int vocab_size = 0;
    int embed_dim = 0;

    bool operator==(const FieldSpec&) const = default;
};

// Grouped non-sequential fields plus the per-event attribute fields shared by
// the global and real-time behavior sequences.
struct FeatureSchema {
    std::vector<FieldSpec> ns_fields;   // flattened in group order USER, ITEM, CROSS
    std::vector<FieldSpec> seq_fields;  // attributes of one sequence event
    int global_max_len = 0;
    int realtime_max_len = 0;

    // d_NS: concatenated width of all non-sequential field embeddings
    int ns_embed_dim() const;
    // d_I: concatenated width of one embedded sequence event
    int seq_item_dim() const;

    void validate() const;  // throws ConfigError

    std::string to_json() const;
    static FeatureSchema from_json(const std::string& text);

    bool operator==(const FeatureSchema&) const = default;
};

// One user-candidate record. Sequences are stored newest-first and flattened:
// event e's attribute ids occupy [e * n_seq_fields, (e+1) * n_seq_fields).
struct Sample {
    std::vector<uint32_t> ns_ids;        // one id per ns field, schema order
    std::vector<uint32_t> global_ids;    // global_len * n_seq_fields ids
    std::vector<uint32_t> realtime_ids;  // realtime_len * n_seq_fields ids
    int global_len = 0;
    int realtime_len = 0;
    uint8_t label = 0;
};

// Throws InputError naming the offending field on any out-of-vocabulary id
// or length overflow.
void validate_sample(const Sample& s, const FeatureSchema& schema);

}  // namespace hemix
