#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hemix/model_config.hpp"
#include "hemix/rng.hpp"
#include "hemix/tape.hpp"

namespace hemix {

// Row ranges of the assembled token matrix:
//   [global routed | global fixed | realtime routed | realtime fixed | ns]
struct TokenLayout {
    int global_routed = 0;
    int global_fixed = 0;
    int realtime_routed = 0;
    int realtime_fixed = 0;
    int ns_tokens = 0;

    int global_begin() const { return 0; }
    int global_fixed_begin() const { return global_routed; }
    int realtime_begin() const { return global_routed + global_fixed; }
    int realtime_fixed_begin() const { return realtime_begin() + realtime_routed; }
    int ns_begin() const { return realtime_fixed_begin() + realtime_fixed; }
    int seq_tokens() const { return ns_begin(); }
    int total() const { return ns_begin() + ns_tokens; }
};

// Embedded views of one sample. Sequence vars are absent when the schema
// allows no events for that sequence.
struct EmbeddedSample {
    Var ns_concat;                 // 1 x d_NS
    std::optional<Var> global_seq; // L_G x d_I, zero rows past global_len
    std::optional<Var> realtime_seq;
    int global_len = 0;
    int realtime_len = 0;
};

// Interact-then-split: an MLP over the concatenated non-sequential embedding
// whose output is reshaped into equal-width tokens.
class NsInteractMlp {
public:
    NsInteractMlp(const std::string& prefix, int input_dim, std::vector<int> hidden_dims,
                  int out_tokens, int out_dim, ParamRegistry& params, Rng& rng);

    Var forward(Tape& t, Var ns_concat) const;  // out_tokens x out_dim

    const std::vector<Parameter*>& weights() const { return weights_; }

private:
    std::vector<Parameter*> weights_;
    std::vector<Parameter*> biases_;
    int out_tokens_;
    int out_dim_;
};

// Cross-attention where every query row owns its projection while key/value
// projections are shared across the sequence.
class MixedHeteroAttention {
public:
    MixedHeteroAttention(const std::string& prefix, int routed_queries, int fixed_queries,
                         int token_dim, int attn_dim, int heads, int seq_item_dim,
                         ParamRegistry& params, Rng& rng);

    // routed: routed_queries x token_dim. seq: L_s x seq_item_dim with zero
    // padding past seq_len. Returns (routed + fixed) x token_dim; all-zero
    // when seq_len == 0.
    Var forward(Tape& t, Var routed, const std::optional<Var>& seq, int seq_len) const;

    int query_count() const { return routed_queries_ + fixed_queries_; }
    Parameter* fixed_query_param() const { return fixed_queries_param_; }

private:
    int routed_queries_;
    int fixed_queries_;
    int token_dim_;
    int attn_dim_;
    int heads_;
    std::vector<Parameter*> query_proj_;  // one per query row, token_dim x attn_dim
    Parameter* key_proj_;                 // seq_item_dim x attn_dim, shared
    Parameter* value_proj_;               // seq_item_dim x attn_dim, shared
    Parameter* out_proj_;                 // attn_dim x token_dim
    Parameter* fixed_queries_param_ = nullptr;  // fixed_queries x token_dim
};

// Full tokenization stage: embedding, NS tokens, query-mixed sequence tokens
// (or the AutoSplit baseline when configured), assembled into N x d_T.
class Tokenizer {
public:
    Tokenizer(const ModelConfig& cfg, ParamRegistry& params, Rng& rng);

    EmbeddedSample embed(Tape& t, const Sample& s) const;
    Var tokens(Tape& t, const Sample& s) const;  // N x token_dim

    const TokenLayout& layout() const { return layout_; }

private:
    Var sequence_tokens_autosplit(Tape& t, const std::optional<Var>& seq, int seq_len,
                                  int token_rows, int group) const;

    const ModelConfig* cfg_;
    TokenLayout layout_;
    std::vector<Parameter*> ns_tables_;
    std::vector<Parameter*> seq_tables_;
    std::optional<NsInteractMlp> ns_mlp_;
    std::optional<MixedHeteroAttention> global_attn_;
    std::optional<MixedHeteroAttention> realtime_attn_;
    // AutoSplit baseline projections, one per sequence
    Parameter* autosplit_w_[2] = {nullptr, nullptr};
    Parameter* autosplit_b_[2] = {nullptr, nullptr};
};

// Scaled-uniform initialization, limit sqrt(6 / (fan_in + fan_out)).
void init_scaled_uniform(Matrix& m, int fan_in, int fan_out, Rng& rng);

}  // namespace hemix
