#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "hemix/model_config.hpp"

namespace hemix {

// Exact parameter counts per component, plus the closed-form approximation
// 2*k*L*N*d_T^2 for the interaction stack.
struct ParamCountReport {
    int64_t embeddings = 0;
    int64_t tokenizer = 0;          // NS MLP + sequence tokenization, excluding tables
    int64_t interaction_stack = 0;  // all block parameters
    int64_t heteromixing_extra = 0; // low-rank mixing parameters only
    int64_t head = 0;
    int64_t total = 0;

    int64_t interaction_approx = 0;  // 2*k*L*N*d_T^2
    double approx_ratio = 0.0;       // interaction_stack / interaction_approx
};

ParamCountReport count_params(const ModelConfig& cfg);

// Analytic multiply-accumulate count (x2) for every matmul in one
// single-sample forward pass with full-length sequences. Keys:
//   tokenizer.ns_mlp, tokenizer.attention, interaction.mixing,
//   interaction.ffn, interaction.attention.proj,
//   interaction.attention.scores, head
struct FlopReport {
    std::map<std::string, int64_t> by_component;
    int64_t total = 0;

    int64_t get(const std::string& key) const {
        auto it = by_component.find(key);
        return it == by_component.end() ? 0 : it->second;
    }
};

FlopReport estimate_flops(const ModelConfig& cfg);

}  // namespace hemix
