#pragma once

#include "hemix/model_config.hpp"
#include "hemix/rng.hpp"
#include "hemix/schema.hpp"

namespace hemix::test {

inline FeatureSchema toy_schema(int n_users = 5, int n_items = 7, int global_max = 5,
                                int realtime_max = 2) {
    FeatureSchema s;
    s.ns_fields = {
        {"user_id", FeatureGroup::kUser, n_users, 3},
        {"user_segment", FeatureGroup::kUser, 4, 2},
        {"item_id", FeatureGroup::kItem, n_items, 3},
        {"item_category", FeatureGroup::kItem, 4, 2},
        {"context_bucket", FeatureGroup::kCross, 3, 2},
    };
    s.seq_fields = {
        {"item_id", FeatureGroup::kItem, n_items, 3},
        {"item_category", FeatureGroup::kItem, 4, 2},
    };
    s.global_max_len = global_max;
    s.realtime_max_len = realtime_max;
    return s;
}

// The standing toy configuration used by gradient and oracle checks:
// 2 NS tokens, token width 8, 2 mix heads, low rank 3, 2 blocks.
inline ModelConfig toy_config(uint64_t seed = 1) {
    ModelConfig cfg;
    cfg.schema = toy_schema();
    cfg.ns_token_count = 2;
    cfg.token_dim = 8;
    cfg.attn_dim = 8;
    cfg.attn_heads = 1;
    cfg.mix_heads = 2;
    cfg.num_blocks = 2;
    cfg.ffn_expansion = 4;
    cfg.low_rank_dim = 3;
    cfg.training.seed = seed;
    cfg.training.batch_size = 4;
    return cfg;
}

inline Sample random_sample(const FeatureSchema& schema, Rng& rng, int min_global = 1,
                            int min_realtime = 0) {
    Sample s;
    for (const auto& f : schema.ns_fields)
        s.ns_ids.push_back(rng.uniform_int(uint32_t(f.vocab_size)));
    const auto fill = [&](std::vector<uint32_t>& ids, int len) {
        for (int e = 0; e < len; ++e)
            for (const auto& f : schema.seq_fields)
                ids.push_back(rng.uniform_int(uint32_t(f.vocab_size)));
    };
    s.global_len = schema.global_max_len == 0
                       ? 0
                       : min_global + int(rng.uniform_int(uint32_t(schema.global_max_len - min_global + 1)));
    s.realtime_len =
        schema.realtime_max_len == 0
            ? 0
            : min_realtime + int(rng.uniform_int(uint32_t(schema.realtime_max_len - min_realtime + 1)));
    fill(s.global_ids, s.global_len);
    fill(s.realtime_ids, s.realtime_len);
    s.label = uint8_t(rng.uniform_int(2));
    return s;
}

}  // namespace hemix::test
