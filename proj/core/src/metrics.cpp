#include "hemix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace hemix {

double auc(const std::vector<uint8_t>& labels, const std::vector<double>& scores) {
    if (labels.size() != scores.size()) throw MetricError("auc: labels/scores size mismatch");
    const size_t n = labels.size();
    int64_t n_pos = 0;
    for (uint8_t l : labels) n_pos += l ? 1 : 0;
    const int64_t n_neg = static_cast<int64_t>(n) - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw MetricError("auc: undefined for single-class labels (" + std::to_string(n_pos) +
                          " positives of " + std::to_string(n) + ")");

    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t(0));
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // average ranks over tied scores, then the Mann-Whitney statistic
    double pos_rank_sum = 0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * (double(i + 1) + double(j + 1));
        for (size_t k = i; k <= j; ++k)
            if (labels[order[k]]) pos_rank_sum += avg_rank;
        i = j + 1;
    }
    const double u = pos_rank_sum - double(n_pos) * (double(n_pos) + 1.0) / 2.0;
    return u / (double(n_pos) * double(n_neg));
}

double logloss_eval(const std::vector<uint8_t>& labels, const std::vector<double>& scores) {
    if (labels.size() != scores.size()) throw MetricError("logloss: labels/scores size mismatch");
    if (labels.empty()) throw MetricError("logloss: empty input");
    constexpr double lo = 1e-7, hi = 1.0 - 1e-7;
    double total = 0;
    for (size_t i = 0; i < labels.size(); ++i) {
        const double p = std::clamp(scores[i], lo, hi);
        total += labels[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / double(labels.size());
}

double rela_imp(double auc_measured, double auc_base) {
    if (auc_base <= 0.5)
        throw MetricError("rela_imp: base AUC " + std::to_string(auc_base) +
                          " must exceed chance level 0.5");
    return ((auc_measured - 0.5) / (auc_base - 0.5) - 1.0) * 100.0;
}

EvalReport evaluate(const std::vector<uint8_t>& labels, const std::vector<double>& scores,
                    std::optional<double> base_auc) {
    EvalReport r;
    r.auc = auc(labels, scores);
    r.logloss = logloss_eval(labels, scores);
    r.n_samples = static_cast<int64_t>(labels.size());
    for (uint8_t l : labels) r.n_positive += l ? 1 : 0;
    if (base_auc.has_value()) r.rela_imp_pct = rela_imp(r.auc, *base_auc);
    return r;
}

std::string EvalReport::to_json() const {
    nlohmann::json j{{"auc", auc},
                     {"logloss", logloss},
                     {"n_samples", n_samples},
                     {"n_positive", n_positive}};
    if (rela_imp_pct.has_value())
        j["rela_imp_pct"] = *rela_imp_pct;
    else
        j["rela_imp_pct"] = nullptr;
    return j.dump();
}

}  // namespace hemix
