#pragma once

#include <optional>
#include <vector>

#include "hemix/adam.hpp"
#include "hemix/heteromixer.hpp"
#include "hemix/model_config.hpp"
#include "hemix/tokenizer.hpp"

namespace hemix {

// Tokenizer + interaction stack + prediction head. Parameters are built
// deterministically from training.seed at construction.
class HemixModel {
public:
    explicit HemixModel(ModelConfig cfg);

    const ModelConfig& config() const { return cfg_; }
    ParamRegistry& params() { return params_; }
    const ParamRegistry& params() const { return params_; }
    const TokenLayout& token_layout() const { return tokenizer_->layout(); }

    // Records the full forward pass for one sample; returns yhat in (0,1).
    Var forward(Tape& t, const Sample& s) const;

    real_t predict(const Sample& s) const;
    std::vector<real_t> predict_batch(const Sample* samples, size_t n) const;

    // Tokenizer output for one sample (test and analysis hook).
    Matrix tokens_of(const Sample& s) const;

    // Resets gradients, accumulates d(mean batch loss)/d(params), applies one
    // Adam update. Deterministic for a given seed and data order regardless
    // of worker count. Returns the mean batch loss.
    real_t train_step(const Sample* batch, size_t n, AdamOptimizer& opt);

    // Mean losses/predictions without an update, for evaluation.
    std::vector<real_t> losses(const Sample* samples, size_t n) const;

private:
    Var head(Tape& t, Var pooled) const;
    int worker_count() const;

    ModelConfig cfg_;
    ParamRegistry params_;
    std::optional<Tokenizer> tokenizer_;
    std::optional<InteractionStack> stack_;
    std::vector<Parameter*> head_w_;
    std::vector<Parameter*> head_b_;
};

// Size of sample chunks processed per worker; gradient reduction follows
// chunk order, so results do not depend on how chunks map to threads.
inline constexpr int kBatchChunk = 32;

}  // namespace hemix
