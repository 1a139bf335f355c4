#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "hemix/matrix.hpp"
#include "hemix/schema.hpp"

namespace hemix {

struct AblationFlags {
    bool no_fixed_query = false;        // drop the learnable fixed queries
    bool autosplit_tokenizer = false;   // mean-pool + project instead of query attention
    bool self_attention_blocks = false; // vanilla transformer blocks instead of HeteroMixer
};

struct TrainingConfig {
    int batch_size = 256;
    real_t learning_rate = real_t(1e-4);
    int steps = 1000;
    uint64_t seed = 1;
    int threads = 0;  // worker cap for batch chunks; 0 = hardware concurrency
};

// All structural hyperparameters. Field comments give the conventional
// symbol used in the ranking-model literature.
struct ModelConfig {
    FeatureSchema schema;

    int ns_token_count = 20;  // N_NS
    int token_dim = 256;      // d_T
    int attn_dim = 0;         // d, attention inner width; 0 = token_dim
    int attn_heads = 1;       // H
    int mix_heads = 8;        // M
    int num_blocks = 2;       // L
    int ffn_expansion = 4;    // k
    int low_rank_dim = 0;     // d_r; 0 = token_dim / 4

    // Learnable fixed-query counts per sequence; -1 mirrors the routed
    // query counts, which keeps sequence tokens at twice the NS tokens.
    int fixed_queries_global = -1;
    int fixed_queries_realtime = -1;

    std::vector<int> ns_hidden_dims;    // empty = two hidden layers of 2*N_NS*d_T
    std::vector<int> head_hidden_dims;  // empty = one hidden layer of d_T/2
    real_t layer_norm_eps = real_t(1e-5);

    AblationFlags ablation;
    TrainingConfig training;

    // --- resolved values ---
    int attention_dim() const { return attn_dim > 0 ? attn_dim : token_dim; }
    int low_rank() const { return low_rank_dim > 0 ? low_rank_dim : std::max(1, token_dim / 4); }

    // 4:1 routed-query split with at least one query per sequence
    int routed_global() const {
        const int r = (ns_token_count + 4) / 5;  // ceil(n/5)
        return std::max(1, ns_token_count - r);
    }
    int routed_realtime() const { return ns_token_count - routed_global(); }

    int fixed_global() const {
        if (ablation.no_fixed_query) return 0;
        return fixed_queries_global >= 0 ? fixed_queries_global : routed_global();
    }
    int fixed_realtime() const {
        if (ablation.no_fixed_query) return 0;
        return fixed_queries_realtime >= 0 ? fixed_queries_realtime : routed_realtime();
    }

    int global_query_count() const { return routed_global() + fixed_global(); }
    int realtime_query_count() const { return routed_realtime() + fixed_realtime(); }
    int seq_token_count() const { return global_query_count() + realtime_query_count(); }
    int token_count() const { return seq_token_count() + ns_token_count; }  // N

    int sub_token_dim() const { return token_dim / mix_heads; }  // d_h

    std::vector<int> ns_mlp_hidden() const {
        if (!ns_hidden_dims.empty()) return ns_hidden_dims;
        const int w = 2 * ns_token_count * token_dim;
        return {w, w};
    }
    std::vector<int> head_hidden() const {
        if (!head_hidden_dims.empty()) return head_hidden_dims;
        return {std::max(1, token_dim / 2)};
    }

    void validate() const;  // throws ConfigError
};

}  // namespace hemix
