#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "hemix/tape.hpp"

namespace hemix::test {

struct GradCheckResult {
    double max_rel_err = 0;
    std::string worst_param;
    size_t entries_checked = 0;
};

// Central finite differences over every entry of every registered parameter.
// `loss_value` must re-run the forward pass with the parameters' current
// values; `compute_analytic` must populate Parameter::gradient (after a
// reset). Relative error uses |a - n| / max(1e-6, |a| + |n|).
inline GradCheckResult finite_difference_check(ParamRegistry& params,
                                               const std::function<double()>& loss_value,
                                               const std::function<void()>& compute_analytic,
                                               double h = 1e-5) {
    params.reset_gradients();
    compute_analytic();
    std::vector<Matrix> analytic;
    analytic.reserve(params.count());
    for (size_t i = 0; i < params.count(); ++i) analytic.push_back(params.at(i).gradient);

    GradCheckResult result;
    for (size_t i = 0; i < params.count(); ++i) {
        Parameter& p = params.at(i);
        for (size_t j = 0; j < p.value.data.size(); ++j) {
            const real_t saved = p.value.data[j];
            p.value.data[j] = saved + real_t(h);
            const double up = loss_value();
            p.value.data[j] = saved - real_t(h);
            const double down = loss_value();
            p.value.data[j] = saved;
            const double numeric = (up - down) / (2 * h);
            const double a = double(analytic[i].data[j]);
            const double rel = std::abs(a - numeric) / std::max(1e-6, std::abs(a) + std::abs(numeric));
            ++result.entries_checked;
            if (rel > result.max_rel_err) {
                result.max_rel_err = rel;
                result.worst_param = p.name + "[" + std::to_string(j) + "]";
            }
        }
    }
    return result;
}

}  // namespace hemix::test
