#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hemix/errors.hpp"

namespace hemix {

// Probability that a random positive outranks a random negative, ties 0.5.
// Rank-sum implementation, O(n log n). Throws MetricError when labels are
// single-class.
double auc(const std::vector<uint8_t>& labels, const std::vector<double>& scores);

// Mean binary cross-entropy with scores clamped to [1e-7, 1 - 1e-7].
double logloss_eval(const std::vector<uint8_t>& labels, const std::vector<double>& scores);

// ((auc_measured - 0.5) / (auc_base - 0.5) - 1) * 100.
// Throws MetricError when auc_base <= 0.5.
double rela_imp(double auc_measured, double auc_base);

struct EvalReport {
    double auc = 0;
    double logloss = 0;
    std::optional<double> rela_imp_pct;
    int64_t n_samples = 0;
    int64_t n_positive = 0;

    std::string to_json() const;  // one JSON-lines record
};

EvalReport evaluate(const std::vector<uint8_t>& labels, const std::vector<double>& scores,
                    std::optional<double> base_auc = std::nullopt);

}  // namespace hemix
