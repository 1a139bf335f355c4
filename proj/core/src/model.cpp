#include "hemix/model.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hemix {

void ModelConfig::validate() const {
    schema.validate();
    if (ns_token_count < 2) throw ConfigError("ns_token_count must be >= 2");
    if (token_dim < 1) throw ConfigError("token_dim must be >= 1");
    if (mix_heads < 1 || token_dim % mix_heads != 0)
        throw ConfigError("mix_heads (" + std::to_string(mix_heads) + ") must divide token_dim (" +
                          std::to_string(token_dim) + ")");
    if (num_blocks < 1) throw ConfigError("num_blocks must be >= 1");
    if (ffn_expansion < 1) throw ConfigError("ffn_expansion must be >= 1");
    if (attn_heads < 1 || attention_dim() % attn_heads != 0)
        throw ConfigError("attn_heads must divide the attention width");
    if (ablation.self_attention_blocks && token_dim % attn_heads != 0)
        throw ConfigError("attn_heads must divide token_dim for self-attention blocks");
    const int mixed_dim = token_count() * sub_token_dim();
    if (!ablation.self_attention_blocks && low_rank() >= mixed_dim)
        throw ConfigError("low_rank_dim must be smaller than token_count * sub_token_dim");
    if (fixed_queries_global == 0 && fixed_queries_realtime == 0 && !ablation.no_fixed_query)
        throw ConfigError("set ablation.no_fixed_query instead of zeroing both fixed query counts");
    if (training.batch_size < 1) throw ConfigError("training.batch_size must be >= 1");
    if (training.learning_rate <= 0) throw ConfigError("training.learning_rate must be > 0");
    if (training.steps < 0) throw ConfigError("training.steps must be >= 0");
    if (layer_norm_eps <= 0) throw ConfigError("layer_norm_eps must be > 0");
}

HemixModel::HemixModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(cfg_.training.seed);
    tokenizer_.emplace(cfg_, params_, rng);
    stack_.emplace(cfg_, params_, rng);

    std::vector<int> dims;
    dims.push_back(cfg_.token_dim);
    for (int h : cfg_.head_hidden()) dims.push_back(h);
    dims.push_back(1);
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        Parameter& w = params_.create("head.w" + std::to_string(i), dims[i], dims[i + 1]);
        init_scaled_uniform(w.value, dims[i], dims[i + 1], rng);
        head_w_.push_back(&w);
        head_b_.push_back(&params_.create("head.b" + std::to_string(i), 1, dims[i + 1]));
    }
}

Var HemixModel::head(Tape& t, Var pooled) const {
    Var h = pooled;
    for (size_t i = 0; i < head_w_.size(); ++i) {
        h = t.add_row_broadcast(t.matmul(h, t.param(*head_w_[i])), t.param(*head_b_[i]));
        if (i + 1 < head_w_.size()) h = t.relu(h);
    }
    return h;
}

Var HemixModel::forward(Tape& t, const Sample& s) const {
    Var tokens = tokenizer_->tokens(t, s);
    ensure_finite(t.val(tokens), "tokenizer output");
    Var interacted = stack_->forward(t, tokens);
    ensure_finite(t.val(interacted), "interaction stack output");
    Var pooled = t.mean_rows(interacted);
    Var yhat = t.sigmoid(head(t, pooled));
    ensure_finite(t.val(yhat), "prediction head output");
    return yhat;
}

real_t HemixModel::predict(const Sample& s) const {
    Tape t;
    return t.val(forward(t, s)).data[0];
}

int HemixModel::worker_count() const {
#ifdef _OPENMP
    const int hw = omp_get_max_threads();
    return cfg_.training.threads > 0 ? std::min(cfg_.training.threads, hw) : hw;
#else
    return 1;
#endif
}

std::vector<real_t> HemixModel::predict_batch(const Sample* samples, size_t n) const {
    std::vector<real_t> out(n);
    const int64_t n_chunks = (static_cast<int64_t>(n) + kBatchChunk - 1) / kBatchChunk;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
#endif
    for (int64_t c = 0; c < n_chunks; ++c) {
        const size_t begin = static_cast<size_t>(c) * kBatchChunk;
        const size_t end = std::min(n, begin + kBatchChunk);
        Tape t;
        for (size_t i = begin; i < end; ++i) out[i] = t.val(forward(t, samples[i])).data[0];
    }
    return out;
}

std::vector<real_t> HemixModel::losses(const Sample* samples, size_t n) const {
    std::vector<real_t> out(n);
    const int64_t n_chunks = (static_cast<int64_t>(n) + kBatchChunk - 1) / kBatchChunk;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
#endif
    for (int64_t c = 0; c < n_chunks; ++c) {
        const size_t begin = static_cast<size_t>(c) * kBatchChunk;
        const size_t end = std::min(n, begin + kBatchChunk);
        Tape t;
        for (size_t i = begin; i < end; ++i) {
            Var loss = t.bce_loss(forward(t, samples[i]), real_t(samples[i].label));
            out[i] = t.val(loss).data[0];
        }
    }
    return out;
}

real_t HemixModel::train_step(const Sample* batch, size_t n, AdamOptimizer& opt) {
    if (n == 0) throw InputError("train_step: empty batch");
    params_.reset_gradients();

    const int64_t n_chunks = (static_cast<int64_t>(n) + kBatchChunk - 1) / kBatchChunk;
    std::vector<GradBuffer> buffers;
    buffers.reserve(n_chunks);
    for (int64_t c = 0; c < n_chunks; ++c) buffers.emplace_back(params_.count());
    std::vector<real_t> losses(n);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1) num_threads(worker_count())
#endif
    for (int64_t c = 0; c < n_chunks; ++c) {
        const size_t begin = static_cast<size_t>(c) * kBatchChunk;
        const size_t end = std::min(n, begin + kBatchChunk);
        Tape t;
        std::vector<Var> chunk_losses;
        chunk_losses.reserve(end - begin);
        for (size_t i = begin; i < end; ++i) {
            Var loss = t.bce_loss(forward(t, batch[i]), real_t(batch[i].label));
            losses[i] = t.val(loss).data[0];
            chunk_losses.push_back(loss);
        }
        Var objective = t.scale(t.sum_scalars(chunk_losses), real_t(1) / real_t(n));
        t.backward(objective, &buffers[c]);
    }

    // Reduce in chunk order: results are independent of the thread count.
    for (const GradBuffer& b : buffers) b.apply(params_);

    real_t total = 0;
    for (real_t l : losses) total += l;
    opt.step();
    return total / real_t(n);
}

Matrix HemixModel::tokens_of(const Sample& s) const {
    Tape t;
    return t.val(tokenizer_->tokens(t, s));
}

}  // namespace hemix
