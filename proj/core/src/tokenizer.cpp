#include "hemix/tokenizer.hpp"

#include <cmath>

namespace hemix {

void init_scaled_uniform(Matrix& m, int fan_in, int fan_out, Rng& rng) {
    const real_t limit = real_t(std::sqrt(6.0 / (fan_in + fan_out)));
    for (real_t& v : m.data) v = real_t(rng.uniform(-limit, limit));
}

namespace {

Parameter& make_projection(ParamRegistry& params, const std::string& name, int rows, int cols,
                           Rng& rng) {
    Parameter& p = params.create(name, rows, cols);
    init_scaled_uniform(p.value, rows, cols, rng);
    return p;
}

Parameter& make_embedding(ParamRegistry& params, const std::string& name, int vocab, int dim,
                          Rng& rng) {
    Parameter& p = params.create(name, vocab, dim);
    init_scaled_uniform(p.value, dim, dim, rng);
    return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// NsInteractMlp

NsInteractMlp::NsInteractMlp(const std::string& prefix, int input_dim,
                             std::vector<int> hidden_dims, int out_tokens, int out_dim,
                             ParamRegistry& params, Rng& rng)
    : out_tokens_(out_tokens), out_dim_(out_dim) {
    if (out_tokens < 1 || out_dim < 1)
        throw ConfigError(prefix + ": output must be at least one token of width >= 1");
    std::vector<int> dims;
    dims.push_back(input_dim);
    for (int h : hidden_dims) {
        if (h < 1) throw ConfigError(prefix + ": hidden width must be >= 1");
        dims.push_back(h);
    }
    dims.push_back(out_tokens * out_dim);
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        weights_.push_back(&make_projection(params, prefix + ".w" + std::to_string(i), dims[i],
                                            dims[i + 1], rng));
        biases_.push_back(&params.create(prefix + ".b" + std::to_string(i), 1, dims[i + 1]));
    }
}

Var NsInteractMlp::forward(Tape& t, Var ns_concat) const {
    Var h = ns_concat;
    for (size_t i = 0; i < weights_.size(); ++i) {
        h = t.add_row_broadcast(t.matmul(h, t.param(*weights_[i])), t.param(*biases_[i]));
        if (i + 1 < weights_.size()) h = t.relu(h);  // final layer stays linear
    }
    return t.reshape(h, out_tokens_, out_dim_);
}

// ---------------------------------------------------------------------------
// MixedHeteroAttention

MixedHeteroAttention::MixedHeteroAttention(const std::string& prefix, int routed_queries,
                                           int fixed_queries, int token_dim, int attn_dim,
                                           int heads, int seq_item_dim, ParamRegistry& params,
                                           Rng& rng)
    : routed_queries_(routed_queries),
      fixed_queries_(fixed_queries),
      token_dim_(token_dim),
      attn_dim_(attn_dim),
      heads_(heads) {
    if (attn_dim % heads != 0)
        throw ConfigError(prefix + ": attention width " + std::to_string(attn_dim) +
                          " not divisible by " + std::to_string(heads) + " heads");
    if (routed_queries + fixed_queries < 1) throw ConfigError(prefix + ": needs at least one query");
    if (fixed_queries_ > 0) {
        fixed_queries_param_ = &params.create(prefix + ".fixed_q", fixed_queries, token_dim);
        init_scaled_uniform(fixed_queries_param_->value, token_dim, token_dim, rng);
    }
    for (int l = 0; l < query_count(); ++l)
        query_proj_.push_back(&make_projection(params, prefix + ".wq" + std::to_string(l),
                                               token_dim, attn_dim, rng));
    key_proj_ = &make_projection(params, prefix + ".wk", seq_item_dim, attn_dim, rng);
    value_proj_ = &make_projection(params, prefix + ".wv", seq_item_dim, attn_dim, rng);
    out_proj_ = &make_projection(params, prefix + ".wo", attn_dim, token_dim, rng);
}

Var MixedHeteroAttention::forward(Tape& t, Var routed, const std::optional<Var>& seq,
                                  int seq_len) const {
    if (t.val(routed).rows != routed_queries_ || t.val(routed).cols != token_dim_)
        throw ShapeError("mixed hetero attention: routed queries " + t.val(routed).shape_str() +
                         ", expected " + std::to_string(routed_queries_) + "x" +
                         std::to_string(token_dim_));
    // New or inactive users can have no behavior yet; emit zero token rows
    // instead of a degenerate softmax.
    if (!seq.has_value() || seq_len == 0)
        return t.leaf(Matrix::zeros(query_count(), token_dim_));

    Var queries = fixed_queries_ > 0
                      ? t.concat_rows({routed, t.param(*fixed_queries_param_)})
                      : routed;

    Var keys = t.matmul(*seq, t.param(*key_proj_));      // L_s x d, zero rows stay zero
    Var values = t.matmul(*seq, t.param(*value_proj_));  // L_s x d
    Var out_w = t.param(*out_proj_);

    const int head_dim = attn_dim_ / heads_;
    std::vector<Var> head_keys_tr, head_values;
    if (heads_ == 1) {
        head_keys_tr.push_back(t.transpose(keys));
        head_values.push_back(values);
    } else {
        for (int h = 0; h < heads_; ++h) {
            head_keys_tr.push_back(t.transpose(t.slice_cols(keys, h * head_dim, head_dim)));
            head_values.push_back(t.slice_cols(values, h * head_dim, head_dim));
        }
    }
    const real_t scale = real_t(1) / real_t(std::sqrt(real_t(head_dim)));

    std::vector<Var> out_rows;
    out_rows.reserve(query_count());
    for (int l = 0; l < query_count(); ++l) {
        // every query row gets its own projection; keys/values stay shared
        Var q = t.matmul(t.slice_rows(queries, l, 1), t.param(*query_proj_[l]));  // 1 x d
        Var ctx;
        if (heads_ == 1) {
            Var att = t.softmax_rows(t.scale(t.matmul(q, head_keys_tr[0]), scale), seq_len);
            ctx = t.matmul(att, head_values[0]);
        } else {
            std::vector<Var> parts;
            parts.reserve(heads_);
            for (int h = 0; h < heads_; ++h) {
                Var qh = t.slice_cols(q, h * head_dim, head_dim);
                Var att = t.softmax_rows(t.scale(t.matmul(qh, head_keys_tr[h]), scale), seq_len);
                parts.push_back(t.matmul(att, head_values[h]));
            }
            ctx = t.concat_cols(parts);
        }
        out_rows.push_back(t.matmul(ctx, out_w));  // 1 x token_dim
    }
    return t.concat_rows(out_rows);
}

// ---------------------------------------------------------------------------
// Tokenizer

Tokenizer::Tokenizer(const ModelConfig& cfg, ParamRegistry& params, Rng& rng) : cfg_(&cfg) {
    const FeatureSchema& schema = cfg.schema;
    layout_.global_routed = cfg.routed_global();
    layout_.global_fixed = cfg.fixed_global();
    layout_.realtime_routed = cfg.routed_realtime();
    layout_.realtime_fixed = cfg.fixed_realtime();
    layout_.ns_tokens = cfg.ns_token_count;

    for (const auto& f : schema.ns_fields)
        ns_tables_.push_back(
            &make_embedding(params, "embed.ns." + f.name, f.vocab_size, f.embed_dim, rng));
    for (const auto& f : schema.seq_fields)
        seq_tables_.push_back(
            &make_embedding(params, "embed.seq." + f.name, f.vocab_size, f.embed_dim, rng));

    ns_mlp_.emplace("tokenizer.ns_mlp", schema.ns_embed_dim(), cfg.ns_mlp_hidden(),
                    cfg.ns_token_count, cfg.token_dim, params, rng);

    if (cfg.ablation.autosplit_tokenizer) {
        const int d_i = schema.seq_item_dim();
        const int widths[2] = {cfg.global_query_count() * cfg.token_dim,
                               cfg.realtime_query_count() * cfg.token_dim};
        const char* names[2] = {"tokenizer.autosplit.global", "tokenizer.autosplit.realtime"};
        for (int s = 0; s < 2; ++s) {
            autosplit_w_[s] = &make_projection(params, std::string(names[s]) + ".w", d_i, widths[s], rng);
            autosplit_b_[s] = &params.create(std::string(names[s]) + ".b", 1, widths[s]);
        }
    } else {
        global_attn_.emplace("tokenizer.global", cfg.routed_global(), cfg.fixed_global(),
                             cfg.token_dim, cfg.attention_dim(), cfg.attn_heads,
                             schema.seq_item_dim(), params, rng);
        realtime_attn_.emplace("tokenizer.realtime", cfg.routed_realtime(), cfg.fixed_realtime(),
                               cfg.token_dim, cfg.attention_dim(), cfg.attn_heads,
                               schema.seq_item_dim(), params, rng);
    }
}

EmbeddedSample Tokenizer::embed(Tape& t, const Sample& s) const {
    validate_sample(s, cfg_->schema);
    EmbeddedSample out;

    std::vector<Var> parts;
    parts.reserve(ns_tables_.size());
    for (size_t f = 0; f < ns_tables_.size(); ++f)
        parts.push_back(t.embed_rows(*ns_tables_[f], {s.ns_ids[f]}));
    out.ns_concat = t.concat_cols(parts);

    const size_t nsf = cfg_->schema.seq_fields.size();
    auto embed_seq = [&](const std::vector<uint32_t>& ids, int len, int max_len) -> std::optional<Var> {
        if (max_len == 0 || nsf == 0) return std::nullopt;
        const int d_i = cfg_->schema.seq_item_dim();
        if (len == 0) return t.leaf(Matrix::zeros(max_len, d_i));
        std::vector<Var> cols;
        cols.reserve(nsf);
        for (size_t f = 0; f < nsf; ++f) {
            std::vector<uint32_t> field_ids(len);
            for (int e = 0; e < len; ++e) field_ids[e] = ids[e * nsf + f];
            cols.push_back(t.embed_rows(*seq_tables_[f], field_ids));
        }
        Var events = t.concat_cols(cols);  // len x d_I
        if (len == max_len) return events;
        return t.concat_rows({events, t.leaf(Matrix::zeros(max_len - len, d_i))});
    };
    out.global_seq = embed_seq(s.global_ids, s.global_len, cfg_->schema.global_max_len);
    out.realtime_seq = embed_seq(s.realtime_ids, s.realtime_len, cfg_->schema.realtime_max_len);
    out.global_len = s.global_len;
    out.realtime_len = s.realtime_len;
    return out;
}

Var Tokenizer::sequence_tokens_autosplit(Tape& t, const std::optional<Var>& seq, int seq_len,
                                         int token_rows, int group) const {
    Var pooled;
    if (!seq.has_value() || seq_len == 0) {
        pooled = t.leaf(Matrix::zeros(1, cfg_->schema.seq_item_dim()));
    } else {
        pooled = t.mean_rows(t.slice_rows(*seq, 0, seq_len));
    }
    Var flat = t.add_row_broadcast(t.matmul(pooled, t.param(*autosplit_w_[group])),
                                   t.param(*autosplit_b_[group]));
    return t.reshape(flat, token_rows, cfg_->token_dim);
}

Var Tokenizer::tokens(Tape& t, const Sample& s) const {
    EmbeddedSample e = embed(t, s);
    Var ns_tokens = ns_mlp_->forward(t, e.ns_concat);

    Var global_tokens, realtime_tokens;
    if (cfg_->ablation.autosplit_tokenizer) {
        global_tokens = sequence_tokens_autosplit(t, e.global_seq, e.global_len,
                                                  cfg_->global_query_count(), 0);
        realtime_tokens = sequence_tokens_autosplit(t, e.realtime_seq, e.realtime_len,
                                                    cfg_->realtime_query_count(), 1);
    } else {
        Var routed_g = t.slice_rows(ns_tokens, 0, layout_.global_routed);
        Var routed_r = t.slice_rows(ns_tokens, layout_.global_routed, layout_.realtime_routed);
        global_tokens = global_attn_->forward(t, routed_g, e.global_seq, e.global_len);
        realtime_tokens = realtime_attn_->forward(t, routed_r, e.realtime_seq, e.realtime_len);
    }
    return t.concat_rows({global_tokens, realtime_tokens, ns_tokens});
}

}  // namespace hemix
