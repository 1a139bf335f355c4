#include "hemix/adam.hpp"

#include <cmath>

namespace hemix {

AdamOptimizer::AdamOptimizer(ParamRegistry& params, AdamConfig cfg) : params_(params), cfg_(cfg) {
    m_.reserve(params.count());
    v_.reserve(params.count());
    for (size_t i = 0; i < params.count(); ++i) {
        const Parameter& p = params.at(i);
        m_.emplace_back(Matrix::zeros(p.value.rows, p.value.cols));
        v_.emplace_back(Matrix::zeros(p.value.rows, p.value.cols));
    }
}

void AdamOptimizer::step() {
    ++t_;
    const real_t bc1 = real_t(1) - std::pow(cfg_.beta1, real_t(t_));
    const real_t bc2 = real_t(1) - std::pow(cfg_.beta2, real_t(t_));
    for (size_t i = 0; i < params_.count(); ++i) {
        Parameter& p = params_.at(i);
        if (!p.gradient.all_finite())
            throw NumericError("non-finite gradient for parameter '" + p.name + "'");
        Matrix& m = m_[i];
        Matrix& v = v_[i];
        for (size_t j = 0; j < p.value.data.size(); ++j) {
            const real_t g = p.gradient.data[j];
            m.data[j] = cfg_.beta1 * m.data[j] + (real_t(1) - cfg_.beta1) * g;
            v.data[j] = cfg_.beta2 * v.data[j] + (real_t(1) - cfg_.beta2) * g * g;
            const real_t mhat = m.data[j] / bc1;
            const real_t vhat = v.data[j] / bc2;
            p.value.data[j] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace hemix
