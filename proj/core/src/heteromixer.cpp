#include "hemix/heteromixer.hpp"

#include <cmath>

#include "hemix/tokenizer.hpp"  // init_scaled_uniform

namespace hemix {

namespace {

void check_fusable(int n_tokens, int token_dim, int m_heads) {
    if (m_heads < 1 || token_dim % m_heads != 0)
        throw ConfigError("token fusion: " + std::to_string(m_heads) +
                          " heads do not divide token width " + std::to_string(token_dim));
    if (n_tokens < 1) throw ConfigError("token fusion: need at least one token");
}

}  // namespace

Matrix fuse_tokens(const Matrix& tokens, int m_heads) {
    check_fusable(tokens.rows, tokens.cols, m_heads);
    const int n = tokens.rows, d_t = tokens.cols, d_h = d_t / m_heads;
    Matrix out(m_heads, n * d_h);
    for (int i = 0; i < m_heads; ++i)
        for (int tok = 0; tok < n; ++tok)
            for (int j = 0; j < d_h; ++j)
                out.at(i, tok * d_h + j) = tokens.at(tok, i * d_h + j);
    return out;
}

Matrix reconstruct_tokens(const Matrix& mixed, int n_tokens, int token_dim) {
    const int m_heads = mixed.rows;
    check_fusable(n_tokens, token_dim, m_heads);
    const int d_h = token_dim / m_heads;
    if (mixed.cols != n_tokens * d_h)
        throw ShapeError("reconstruct_tokens: mixed " + mixed.shape_str() + " vs " +
                         std::to_string(n_tokens) + " tokens of width " + std::to_string(token_dim));
    Matrix out(n_tokens, token_dim);
    for (int tok = 0; tok < n_tokens; ++tok)
        for (int i = 0; i < m_heads; ++i)
            for (int j = 0; j < d_h; ++j)
                out.at(tok, i * d_h + j) = mixed.at(i, tok * d_h + j);
    return out;
}

std::shared_ptr<const std::vector<int>> fuse_permutation(int n_tokens, int token_dim, int m_heads) {
    check_fusable(n_tokens, token_dim, m_heads);
    const int d_h = token_dim / m_heads;
    auto perm = std::make_shared<std::vector<int>>(static_cast<size_t>(n_tokens) * token_dim);
    for (int i = 0; i < m_heads; ++i)
        for (int tok = 0; tok < n_tokens; ++tok)
            for (int j = 0; j < d_h; ++j)
                (*perm)[static_cast<size_t>(i) * n_tokens * d_h + tok * d_h + j] =
                    tok * token_dim + i * d_h + j;
    return perm;
}

std::shared_ptr<const std::vector<int>> reconstruct_permutation(int n_tokens, int token_dim,
                                                                int m_heads) {
    check_fusable(n_tokens, token_dim, m_heads);
    const int d_h = token_dim / m_heads;
    auto perm = std::make_shared<std::vector<int>>(static_cast<size_t>(n_tokens) * token_dim);
    for (int tok = 0; tok < n_tokens; ++tok)
        for (int i = 0; i < m_heads; ++i)
            for (int j = 0; j < d_h; ++j)
                (*perm)[static_cast<size_t>(tok) * token_dim + i * d_h + j] =
                    i * n_tokens * d_h + tok * d_h + j;
    return perm;
}

// ---------------------------------------------------------------------------
// HeteroMixerBlock

HeteroMixerBlock::HeteroMixerBlock(const std::string& prefix, int n_tokens, int token_dim,
                                   int mix_heads, int low_rank_dim, int ffn_expansion,
                                   real_t ln_eps, ParamRegistry& params, Rng& rng)
    : n_tokens_(n_tokens),
      token_dim_(token_dim),
      mix_heads_(mix_heads),
      low_rank_dim_(low_rank_dim),
      ln_eps_(ln_eps) {
    check_fusable(n_tokens, token_dim, mix_heads);
    const int mixed_dim = n_tokens * (token_dim / mix_heads);
    if (low_rank_dim < 1 || low_rank_dim >= mixed_dim)
        throw ConfigError(prefix + ": low-rank width " + std::to_string(low_rank_dim) +
                          " must be in [1, " + std::to_string(mixed_dim) + ")");
    if (ffn_expansion < 1) throw ConfigError(prefix + ": ffn expansion must be >= 1");

    fuse_perm_ = fuse_permutation(n_tokens, token_dim, mix_heads);
    recon_perm_ = reconstruct_permutation(n_tokens, token_dim, mix_heads);

    for (int m = 0; m < mix_heads; ++m) {
        Parameter& low = params.create(prefix + ".mix.low." + std::to_string(m), low_rank_dim, mixed_dim);
        init_scaled_uniform(low.value, mixed_dim, low_rank_dim, rng);
        mix_low_.push_back(&low);
        Parameter& high = params.create(prefix + ".mix.high." + std::to_string(m), mixed_dim, low_rank_dim);
        init_scaled_uniform(high.value, low_rank_dim, mixed_dim, rng);
        mix_high_.push_back(&high);
    }
    const int hidden = ffn_expansion * token_dim;
    for (int i = 0; i < n_tokens; ++i) {
        const std::string tok = std::to_string(i);
        Parameter& w1 = params.create(prefix + ".ffn.w1." + tok, token_dim, hidden);
        init_scaled_uniform(w1.value, token_dim, hidden, rng);
        ffn_w1_.push_back(&w1);
        ffn_b1_.push_back(&params.create(prefix + ".ffn.b1." + tok, 1, hidden));
        Parameter& w2 = params.create(prefix + ".ffn.w2." + tok, hidden, token_dim);
        init_scaled_uniform(w2.value, hidden, token_dim, rng);
        ffn_w2_.push_back(&w2);
        ffn_b2_.push_back(&params.create(prefix + ".ffn.b2." + tok, 1, token_dim));
    }
    ln1_gain_ = &params.add(prefix + ".ln1.gain", Matrix::filled(1, token_dim, 1));
    ln1_bias_ = &params.create(prefix + ".ln1.bias", 1, token_dim);
    ln2_gain_ = &params.add(prefix + ".ln2.gain", Matrix::filled(1, token_dim, 1));
    ln2_bias_ = &params.create(prefix + ".ln2.bias", 1, token_dim);
}

Var HeteroMixerBlock::interact(Tape& t, Var fused) const {
    std::vector<Var> rows;
    rows.reserve(mix_heads_);
    for (int m = 0; m < mix_heads_; ++m) {
        Var g = t.slice_rows(fused, m, 1);  // 1 x (N * d_h)
        Var low = t.relu(t.matmul(g, t.transpose(t.param(*mix_low_[m]))));
        rows.push_back(t.matmul(low, t.transpose(t.param(*mix_high_[m]))));
    }
    return t.concat_rows(rows);
}

Var HeteroMixerBlock::mix_sublayer(Tape& t, Var tokens) const {
    const int d_h = token_dim_ / mix_heads_;
    Var fused = t.permute_flat(tokens, fuse_perm_, mix_heads_, n_tokens_ * d_h);
    Var refined = interact(t, fused);
    Var recon = t.permute_flat(refined, recon_perm_, n_tokens_, token_dim_);
    return t.layer_norm(t.add(recon, tokens), t.param(*ln1_gain_), t.param(*ln1_bias_), ln_eps_);
}

Var HeteroMixerBlock::ffn_sublayer(Tape& t, Var s) const {
    std::vector<Var> rows;
    rows.reserve(n_tokens_);
    for (int i = 0; i < n_tokens_; ++i) {
        Var row = t.slice_rows(s, i, 1);
        Var h = t.relu(t.add_row_broadcast(t.matmul(row, t.param(*ffn_w1_[i])), t.param(*ffn_b1_[i])));
        rows.push_back(t.add_row_broadcast(t.matmul(h, t.param(*ffn_w2_[i])), t.param(*ffn_b2_[i])));
    }
    Var out = t.concat_rows(rows);
    return t.layer_norm(t.add(out, s), t.param(*ln2_gain_), t.param(*ln2_bias_), ln_eps_);
}

// ---------------------------------------------------------------------------
// SelfAttentionBlock

SelfAttentionBlock::SelfAttentionBlock(const std::string& prefix, int n_tokens, int token_dim,
                                       int heads, int ffn_expansion, real_t ln_eps,
                                       ParamRegistry& params, Rng& rng)
    : n_tokens_(n_tokens), token_dim_(token_dim), heads_(heads), ln_eps_(ln_eps) {
    if (heads < 1 || token_dim % heads != 0)
        throw ConfigError(prefix + ": head count " + std::to_string(heads) +
                          " does not divide token width " + std::to_string(token_dim));
    wq_ = &params.create(prefix + ".attn.wq", token_dim, token_dim);
    wk_ = &params.create(prefix + ".attn.wk", token_dim, token_dim);
    wv_ = &params.create(prefix + ".attn.wv", token_dim, token_dim);
    wo_ = &params.create(prefix + ".attn.wo", token_dim, token_dim);
    for (Parameter* p : {wq_, wk_, wv_, wo_}) init_scaled_uniform(p->value, token_dim, token_dim, rng);

    const int hidden = ffn_expansion * token_dim;
    Parameter& w1 = params.create(prefix + ".ffn.w1", token_dim, hidden);
    init_scaled_uniform(w1.value, token_dim, hidden, rng);
    ffn_w1_ = &w1;
    ffn_b1_ = &params.create(prefix + ".ffn.b1", 1, hidden);
    Parameter& w2 = params.create(prefix + ".ffn.w2", hidden, token_dim);
    init_scaled_uniform(w2.value, hidden, token_dim, rng);
    ffn_w2_ = &w2;
    ffn_b2_ = &params.create(prefix + ".ffn.b2", 1, token_dim);

    ln1_gain_ = &params.add(prefix + ".ln1.gain", Matrix::filled(1, token_dim, 1));
    ln1_bias_ = &params.create(prefix + ".ln1.bias", 1, token_dim);
    ln2_gain_ = &params.add(prefix + ".ln2.gain", Matrix::filled(1, token_dim, 1));
    ln2_bias_ = &params.create(prefix + ".ln2.bias", 1, token_dim);
}

Var SelfAttentionBlock::forward(Tape& t, Var tokens) const {
    Var q = t.matmul(tokens, t.param(*wq_));
    Var k = t.matmul(tokens, t.param(*wk_));
    Var v = t.matmul(tokens, t.param(*wv_));
    const int head_dim = token_dim_ / heads_;
    const real_t scale = real_t(1) / real_t(std::sqrt(real_t(head_dim)));
    Var ctx;
    if (heads_ == 1) {
        Var att = t.softmax_rows(t.scale(t.matmul(q, t.transpose(k)), scale));
        ctx = t.matmul(att, v);
    } else {
        std::vector<Var> parts;
        parts.reserve(heads_);
        for (int h = 0; h < heads_; ++h) {
            Var qh = t.slice_cols(q, h * head_dim, head_dim);
            Var kh = t.slice_cols(k, h * head_dim, head_dim);
            Var vh = t.slice_cols(v, h * head_dim, head_dim);
            Var att = t.softmax_rows(t.scale(t.matmul(qh, t.transpose(kh)), scale));
            parts.push_back(t.matmul(att, vh));
        }
        ctx = t.concat_cols(parts);
    }
    Var attn_out = t.matmul(ctx, t.param(*wo_));
    Var s = t.layer_norm(t.add(attn_out, tokens), t.param(*ln1_gain_), t.param(*ln1_bias_), ln_eps_);
    Var h = t.relu(t.add_row_broadcast(t.matmul(s, t.param(*ffn_w1_)), t.param(*ffn_b1_)));
    Var out = t.add_row_broadcast(t.matmul(h, t.param(*ffn_w2_)), t.param(*ffn_b2_));
    return t.layer_norm(t.add(out, s), t.param(*ln2_gain_), t.param(*ln2_bias_), ln_eps_);
}

// ---------------------------------------------------------------------------
// InteractionStack

InteractionStack::InteractionStack(const ModelConfig& cfg, ParamRegistry& params, Rng& rng) {
    if (cfg.num_blocks < 1) throw ConfigError("interaction stack: depth must be >= 1");
    const int n = cfg.token_count();
    for (int l = 0; l < cfg.num_blocks; ++l) {
        const std::string prefix = "block" + std::to_string(l);
        if (cfg.ablation.self_attention_blocks) {
            attn_blocks_.emplace_back(prefix, n, cfg.token_dim, cfg.attn_heads, cfg.ffn_expansion,
                                      cfg.layer_norm_eps, params, rng);
        } else {
            mixer_blocks_.emplace_back(prefix, n, cfg.token_dim, cfg.mix_heads, cfg.low_rank(),
                                       cfg.ffn_expansion, cfg.layer_norm_eps, params, rng);
        }
    }
}

Var InteractionStack::forward(Tape& t, Var tokens) const {
    Var x = tokens;
    for (const auto& b : mixer_blocks_) x = b.forward(t, x);
    for (const auto& b : attn_blocks_) x = b.forward(t, x);
    return x;
}

int InteractionStack::depth() const {
    return static_cast<int>(mixer_blocks_.size() + attn_blocks_.size());
}

}  // namespace hemix
