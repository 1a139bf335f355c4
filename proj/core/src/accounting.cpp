#include "hemix/accounting.hpp"

namespace hemix {

namespace {

int64_t mlp_params(int64_t in, const std::vector<int>& hidden, int64_t out) {
    int64_t total = 0;
    int64_t prev = in;
    for (int h : hidden) {
        total += prev * h + h;
        prev = h;
    }
    return total + prev * out + out;
}

int64_t mlp_flops(int64_t in, const std::vector<int>& hidden, int64_t out) {
    int64_t total = 0;
    int64_t prev = in;
    for (int h : hidden) {
        total += 2 * prev * h;
        prev = h;
    }
    return total + 2 * prev * out;
}

}  // namespace

ParamCountReport count_params(const ModelConfig& cfg) {
    cfg.validate();
    ParamCountReport r;
    const int64_t n = cfg.token_count();
    const int64_t d_t = cfg.token_dim;
    const int64_t d = cfg.attention_dim();
    const int64_t d_i = cfg.schema.seq_item_dim();
    const int64_t k = cfg.ffn_expansion;
    const int64_t depth = cfg.num_blocks;

    for (const auto& f : cfg.schema.ns_fields)
        r.embeddings += int64_t(f.vocab_size) * f.embed_dim;
    for (const auto& f : cfg.schema.seq_fields)
        r.embeddings += int64_t(f.vocab_size) * f.embed_dim;

    r.tokenizer = mlp_params(cfg.schema.ns_embed_dim(), cfg.ns_mlp_hidden(), int64_t(cfg.ns_token_count) * d_t);
    if (cfg.ablation.autosplit_tokenizer) {
        for (int64_t q : {int64_t(cfg.global_query_count()), int64_t(cfg.realtime_query_count())})
            r.tokenizer += d_i * (q * d_t) + q * d_t;
    } else {
        for (auto [routed, fixed] :
             {std::pair{cfg.routed_global(), cfg.fixed_global()},
              std::pair{cfg.routed_realtime(), cfg.fixed_realtime()}}) {
            const int64_t l_q = routed + fixed;
            r.tokenizer += l_q * d_t * d;        // per-query projections
            r.tokenizer += 2 * d_i * d;          // shared key/value projections
            r.tokenizer += d * d_t;              // output projection
            r.tokenizer += int64_t(fixed) * d_t; // learnable fixed queries
        }
    }

    const int64_t ffn_per_token = d_t * (k * d_t) + k * d_t + (k * d_t) * d_t + d_t;
    const int64_t ln_per_block = 4 * d_t;
    if (cfg.ablation.self_attention_blocks) {
        r.interaction_stack = depth * (4 * d_t * d_t + ffn_per_token + ln_per_block);
    } else {
        r.heteromixing_extra = depth * 2 * n * d_t * cfg.low_rank();
        r.interaction_stack = r.heteromixing_extra + depth * (n * ffn_per_token + ln_per_block);
    }

    r.head = mlp_params(d_t, cfg.head_hidden(), 1);
    r.total = r.embeddings + r.tokenizer + r.interaction_stack + r.head;

    r.interaction_approx = 2 * k * depth * n * d_t * d_t;
    r.approx_ratio = double(r.interaction_stack) / double(r.interaction_approx);
    return r;
}

FlopReport estimate_flops(const ModelConfig& cfg) {
    cfg.validate();
    FlopReport r;
    const int64_t n = cfg.token_count();
    const int64_t d_t = cfg.token_dim;
    const int64_t d = cfg.attention_dim();
    const int64_t d_i = cfg.schema.seq_item_dim();
    const int64_t k = cfg.ffn_expansion;
    const int64_t depth = cfg.num_blocks;

    r.by_component["tokenizer.ns_mlp"] =
        mlp_flops(cfg.schema.ns_embed_dim(), cfg.ns_mlp_hidden(), int64_t(cfg.ns_token_count) * d_t);

    int64_t attn = 0;
    if (cfg.ablation.autosplit_tokenizer) {
        attn += 2 * d_i * (int64_t(cfg.global_query_count()) * d_t);
        attn += 2 * d_i * (int64_t(cfg.realtime_query_count()) * d_t);
    } else {
        for (auto [l_q, l_s] :
             {std::pair{int64_t(cfg.global_query_count()), int64_t(cfg.schema.global_max_len)},
              std::pair{int64_t(cfg.realtime_query_count()), int64_t(cfg.schema.realtime_max_len)}}) {
            if (l_s == 0) continue;
            attn += 2 * (2 * l_s * d_i * d);          // shared K/V projections
            attn += l_q * 2 * d_t * d;                // per-query projections
            attn += l_q * (2 * d * l_s + 2 * l_s * d);  // scores + context
            attn += l_q * 2 * d * d_t;                // output projection
        }
    }
    r.by_component["tokenizer.attention"] = attn;

    const int64_t ffn_block = n * (2 * d_t * (k * d_t) + 2 * (k * d_t) * d_t);
    if (cfg.ablation.self_attention_blocks) {
        r.by_component["interaction.attention.proj"] = depth * 4 * (2 * n * d_t * d_t);
        r.by_component["interaction.attention.scores"] = depth * (2 * n * n * d_t + 2 * n * n * d_t);
        r.by_component["interaction.ffn"] = depth * ffn_block;
    } else {
        // mixing: per mixed row, down- and up-projection through rank d_r
        r.by_component["interaction.mixing"] = depth * 4 * n * d_t * cfg.low_rank();
        r.by_component["interaction.ffn"] = depth * ffn_block;
    }

    r.by_component["head"] = mlp_flops(d_t, cfg.head_hidden(), 1);

    for (const auto& [key, v] : r.by_component) r.total += v;
    return r;
}

}  // namespace hemix
