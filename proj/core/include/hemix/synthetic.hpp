#pragma once

#include <cstdint>
#include <vector>

#include "hemix/rng.hpp"
#include "hemix/schema.hpp"

namespace hemix {

// Weights of the planted click function. The label logit is
//   bias
//   + affinity_weight * (segment-category affinity + id-latent affinity)
//   + interest_weight * global-sequence/candidate category match
//   + recency_weight  * real-time-sequence/candidate category match
//   + population_weight * candidate-independent sequence pattern score
//   + Normal(0, noise_scale)
// so both sequences and both the candidate-aware and candidate-invariant
// pathways carry learnable signal.
struct PlantedSpec {
    int user_latent_dim = 8;
    double interest_weight = 1.5;
    double recency_weight = 1.2;
    double affinity_weight = 1.2;
    double population_weight = 0.8;
    double noise_scale = 0.35;
    double bias = -1.3;
};

struct SyntheticSpec {
    int64_t n_users = 2000;
    int64_t n_items = 5000;
    FeatureSchema schema;
    int mean_global_len = 50;
    int mean_rt_len = 5;
    int64_t n_train = 200000;
    int64_t n_test = 20000;
    PlantedSpec planted;
    uint64_t seed = 1;

    void validate() const;  // throws ConfigError, including schema compatibility
};

struct GeneratedDataset {
    FeatureSchema schema;
    std::vector<Sample> samples;  // first n_train records are the train split
    int64_t n_train = 0;
    uint64_t seed = 0;
    int64_t positive_count = 0;

    double positive_rate() const {
        return samples.empty() ? 0.0 : double(positive_count) / double(samples.size());
    }
};

// Deterministic in spec.seed; sample i only depends on (seed, i), so
// generation may be parallelized per sample.
GeneratedDataset generate_dataset(const SyntheticSpec& spec);

// The schema shape generate_dataset expects, sized from the spec. Useful as
// a starting point for hand-written configs.
FeatureSchema canonical_synthetic_schema(int64_t n_users, int64_t n_items, int global_max_len,
                                         int realtime_max_len);

}  // namespace hemix
