#pragma once

#include <vector>

#include "hemix/tape.hpp"

namespace hemix {

struct AdamConfig {
    real_t learning_rate = real_t(1e-4);
    real_t beta1 = real_t(0.9);
    real_t beta2 = real_t(0.999);
    real_t eps = real_t(1e-8);
};

// Adam with bias correction over a ParamRegistry.
class AdamOptimizer {
public:
    AdamOptimizer(ParamRegistry& params, AdamConfig cfg);

    // Applies one update from the gradients currently held by the parameters.
    // Throws NumericError naming the parameter if its gradient is non-finite.
    void step();

    int64_t steps_taken() const { return t_; }

private:
    ParamRegistry& params_;
    AdamConfig cfg_;
    std::vector<Matrix> m_;
    std::vector<Matrix> v_;
    int64_t t_ = 0;
};

}  // namespace hemix
