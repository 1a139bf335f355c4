#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hemix/model_config.hpp"
#include "hemix/rng.hpp"
#include "hemix/tape.hpp"

namespace hemix {

// Multi-head token fusion: split each of the N token rows into m_heads
// sub-tokens of width d_T/m_heads and concatenate the i-th sub-token of all
// tokens into mixed row i. Pure reshaping, no parameters.
Matrix fuse_tokens(const Matrix& tokens, int m_heads);

// Exact inverse of fuse_tokens.
Matrix reconstruct_tokens(const Matrix& mixed, int n_tokens, int token_dim);

// Flat-index permutations implementing the same bijection on a tape.
std::shared_ptr<const std::vector<int>> fuse_permutation(int n_tokens, int token_dim, int m_heads);
std::shared_ptr<const std::vector<int>> reconstruct_permutation(int n_tokens, int token_dim,
                                                                int m_heads);

// One interaction block: HeteroMixing (fuse, per-mixed-token low-rank MLP,
// reconstruct, add & norm) followed by a per-token FFN (add & norm).
class HeteroMixerBlock {
public:
    HeteroMixerBlock(const std::string& prefix, int n_tokens, int token_dim, int mix_heads,
                     int low_rank_dim, int ffn_expansion, real_t ln_eps, ParamRegistry& params,
                     Rng& rng);

    // Low-rank heterogeneous interaction on the fused matrix, one dedicated
    // matrix pair per mixed row, no biases.
    Var interact(Tape& t, Var fused) const;

    Var mix_sublayer(Tape& t, Var tokens) const;  // LN(reconstruct(interact(fuse(T))) + T)
    Var ffn_sublayer(Tape& t, Var s) const;       // LN(HeteroFFN(S) + S)
    Var forward(Tape& t, Var tokens) const { return ffn_sublayer(t, mix_sublayer(t, tokens)); }

private:
    int n_tokens_, token_dim_, mix_heads_, low_rank_dim_;
    real_t ln_eps_;
    std::shared_ptr<const std::vector<int>> fuse_perm_, recon_perm_;
    std::vector<Parameter*> mix_low_;   // m: low_rank_dim x (N * d_h)
    std::vector<Parameter*> mix_high_;  // m: (N * d_h) x low_rank_dim
    std::vector<Parameter*> ffn_w1_, ffn_b1_, ffn_w2_, ffn_b2_;  // per token
    Parameter *ln1_gain_, *ln1_bias_, *ln2_gain_, *ln2_bias_;
};

// Ablation baseline: standard multi-head self-attention over the N tokens
// plus one shared FFN, same add & norm placement as the HeteroMixer block.
class SelfAttentionBlock {
public:
    SelfAttentionBlock(const std::string& prefix, int n_tokens, int token_dim, int heads,
                       int ffn_expansion, real_t ln_eps, ParamRegistry& params, Rng& rng);

    Var forward(Tape& t, Var tokens) const;

private:
    int n_tokens_, token_dim_, heads_;
    real_t ln_eps_;
    Parameter *wq_, *wk_, *wv_, *wo_;
    Parameter *ffn_w1_, *ffn_b1_, *ffn_w2_, *ffn_b2_;
    Parameter *ln1_gain_, *ln1_bias_, *ln2_gain_, *ln2_bias_;
};

// L stacked interaction blocks of one kind.
class InteractionStack {
public:
    InteractionStack(const ModelConfig& cfg, ParamRegistry& params, Rng& rng);

    Var forward(Tape& t, Var tokens) const;

    int depth() const;
    const HeteroMixerBlock& mixer_block(int i) const { return mixer_blocks_[i]; }

private:
    std::vector<HeteroMixerBlock> mixer_blocks_;
    std::vector<SelfAttentionBlock> attn_blocks_;
};

}  // namespace hemix
