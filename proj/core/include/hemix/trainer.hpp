#pragma once

#include <optional>
#include <vector>

#include "hemix/metrics.hpp"
#include "hemix/model.hpp"
#include "hemix/synthetic.hpp"

namespace hemix {

struct TrainOutcome {
    std::vector<double> loss_curve;  // mean batch loss per step
    EvalReport eval;                 // on the held-out split
    double train_seconds = 0;
    double eval_seconds = 0;
};

// Runs config.training.steps optimizer steps over the train split (sequential
// batches with wrap-around) and evaluates on the held-out split. Fully
// deterministic for a given config and dataset.
TrainOutcome train_and_evaluate(HemixModel& model, const GeneratedDataset& data,
                                std::optional<double> base_auc = std::nullopt);

// Evaluation only (used for checkpoints and untrained baselines).
EvalReport evaluate_model(const HemixModel& model, const Sample* samples, size_t n,
                          std::optional<double> base_auc = std::nullopt);

}  // namespace hemix
