#include "hemix/trainer.hpp"

#include <chrono>

namespace hemix {

namespace {
double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}
}  // namespace

EvalReport evaluate_model(const HemixModel& model, const Sample* samples, size_t n,
                          std::optional<double> base_auc) {
    std::vector<real_t> scores = model.predict_batch(samples, n);
    std::vector<uint8_t> labels(n);
    std::vector<double> s(n);
    for (size_t i = 0; i < n; ++i) {
        labels[i] = samples[i].label;
        s[i] = static_cast<double>(scores[i]);
    }
    return evaluate(labels, s, base_auc);
}

TrainOutcome train_and_evaluate(HemixModel& model, const GeneratedDataset& data,
                                std::optional<double> base_auc) {
    if (data.schema != model.config().schema)
        throw ConfigError("dataset schema does not match the model schema");
    const int64_t n_train = data.n_train;
    const int64_t n_test = static_cast<int64_t>(data.samples.size()) - n_train;
    if (n_train < 1) throw ConfigError("dataset has no training split");

    const TrainingConfig& tc = model.config().training;
    AdamOptimizer opt(model.params(), AdamConfig{.learning_rate = tc.learning_rate});

    TrainOutcome out;
    out.loss_curve.reserve(tc.steps);
    const auto t0 = std::chrono::steady_clock::now();

    const int64_t batch = tc.batch_size;
    std::vector<Sample> wrap_buf;
    int64_t cursor = 0;
    for (int step = 0; step < tc.steps; ++step) {
        const Sample* batch_ptr;
        if (cursor + batch <= n_train) {
            batch_ptr = data.samples.data() + cursor;
        } else {
            // wrap-around batch: tail of the split followed by its head
            wrap_buf.clear();
            int64_t need = batch, pos = cursor;
            while (need > 0) {
                const int64_t take = std::min(need, n_train - pos);
                wrap_buf.insert(wrap_buf.end(), data.samples.begin() + pos,
                                data.samples.begin() + pos + take);
                need -= take;
                pos = (pos + take) % n_train;
            }
            batch_ptr = wrap_buf.data();
        }
        out.loss_curve.push_back(model.train_step(batch_ptr, batch, opt));
        cursor = (cursor + batch) % n_train;
    }
    out.train_seconds = seconds_since(t0);

    const auto t1 = std::chrono::steady_clock::now();
    if (n_test > 0) {
        out.eval = evaluate_model(model, data.samples.data() + n_train, n_test, base_auc);
    }
    out.eval_seconds = seconds_since(t1);
    return out;
}

}  // namespace hemix
