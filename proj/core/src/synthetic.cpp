#include "hemix/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hemix/errors.hpp"

namespace hemix {

namespace {

int find_field(const std::vector<FieldSpec>& fields, const std::string& name) {
    for (size_t i = 0; i < fields.size(); ++i)
        if (fields[i].name == name) return static_cast<int>(i);
    return -1;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Entity-level latents, all derived from the spec seed.
struct PlantedWorld {
    int n_segments = 0;
    int n_categories = 0;
    std::vector<uint32_t> user_segment;
    std::vector<uint32_t> user_primary_cat, user_secondary_cat;
    std::vector<double> user_latent;  // n_users x latent_dim
    std::vector<uint32_t> item_category;
    std::vector<double> item_latent;  // n_items x latent_dim
    std::vector<std::vector<uint32_t>> items_by_category;
    std::vector<double> segment_category_affinity;  // n_segments x n_categories
    std::vector<double> category_pop_score;

    PlantedWorld(const SyntheticSpec& spec, int n_segments_in, int n_categories_in) {
        n_segments = n_segments_in;
        n_categories = n_categories_in;
        const int d = spec.planted.user_latent_dim;
        Rng rng = Rng(spec.seed).fork(0xabcd0001);

        item_category.resize(spec.n_items);
        item_latent.resize(spec.n_items * d);
        items_by_category.resize(n_categories);
        for (int64_t i = 0; i < spec.n_items; ++i) {
            item_category[i] = rng.uniform_int(uint32_t(n_categories));
            items_by_category[item_category[i]].push_back(uint32_t(i));
            for (int z = 0; z < d; ++z) item_latent[i * d + z] = rng.normal();
        }
        // guard against empty categories at tiny n_items
        for (int c = 0; c < n_categories; ++c)
            if (items_by_category[c].empty())
                items_by_category[c].push_back(rng.uniform_int(uint32_t(spec.n_items)));

        user_segment.resize(spec.n_users);
        user_primary_cat.resize(spec.n_users);
        user_secondary_cat.resize(spec.n_users);
        user_latent.resize(spec.n_users * d);
        for (int64_t u = 0; u < spec.n_users; ++u) {
            user_segment[u] = rng.uniform_int(uint32_t(n_segments));
            user_primary_cat[u] = rng.uniform_int(uint32_t(n_categories));
            user_secondary_cat[u] = rng.uniform_int(uint32_t(n_categories));
            for (int z = 0; z < d; ++z) user_latent[u * d + z] = rng.normal();
        }

        segment_category_affinity.resize(size_t(n_segments) * n_categories);
        for (double& v : segment_category_affinity) v = rng.normal();
        category_pop_score.resize(n_categories);
        for (double& v : category_pop_score) v = rng.normal();
    }
};

int sample_length(Rng& rng, int mean, int max_len, int min_len) {
    if (max_len == 0 || mean == 0) return 0;
    const double spread = std::max(1.0, mean / 3.0);
    const int len = int(std::lround(mean + spread * rng.normal()));
    return std::clamp(len, min_len, max_len);
}

}  // namespace

FeatureSchema canonical_synthetic_schema(int64_t n_users, int64_t n_items, int global_max_len,
                                         int realtime_max_len) {
    FeatureSchema s;
    s.ns_fields = {
        {"user_id", FeatureGroup::kUser, int(n_users), 16},
        {"user_segment", FeatureGroup::kUser, 8, 8},
        {"item_id", FeatureGroup::kItem, int(n_items), 16},
        {"item_category", FeatureGroup::kItem, 12, 8},
        {"context_bucket", FeatureGroup::kCross, 16, 4},
    };
    s.seq_fields = {
        {"item_id", FeatureGroup::kItem, int(n_items), 16},
        {"item_category", FeatureGroup::kItem, 12, 8},
    };
    s.global_max_len = global_max_len;
    s.realtime_max_len = realtime_max_len;
    return s;
}

void SyntheticSpec::validate() const {
    schema.validate();
    if (n_users < 2 || n_items < 2) throw ConfigError("synthetic: need at least 2 users and 2 items");
    if (n_train < 1 || n_test < 0) throw ConfigError("synthetic: n_train must be >= 1, n_test >= 0");
    if (mean_global_len > schema.global_max_len || mean_rt_len > schema.realtime_max_len)
        throw ConfigError("synthetic: mean sequence lengths must not exceed schema max lengths");
    if (mean_global_len < 0 || mean_rt_len < 0) throw ConfigError("synthetic: mean lengths must be >= 0");
    if (planted.user_latent_dim < 1) throw ConfigError("synthetic: user_latent_dim must be >= 1");
    if (planted.noise_scale < 0) throw ConfigError("synthetic: noise_scale must be >= 0");

    auto need_ns = [&](const char* name, int64_t vocab) {
        const int idx = find_field(schema.ns_fields, name);
        if (idx < 0) throw ConfigError(std::string("synthetic: schema is missing ns field '") + name + "'");
        if (schema.ns_fields[idx].vocab_size != vocab)
            throw ConfigError(std::string("synthetic: field '") + name + "' vocab_size " +
                              std::to_string(schema.ns_fields[idx].vocab_size) + " != " +
                              std::to_string(vocab));
    };
    need_ns("user_id", n_users);
    need_ns("item_id", n_items);
    if (find_field(schema.ns_fields, "user_segment") < 0)
        throw ConfigError("synthetic: schema is missing ns field 'user_segment'");
    if (find_field(schema.ns_fields, "item_category") < 0)
        throw ConfigError("synthetic: schema is missing ns field 'item_category'");
    if (schema.global_max_len > 0 || schema.realtime_max_len > 0) {
        const int sid = find_field(schema.seq_fields, "item_id");
        if (sid < 0 || schema.seq_fields[sid].vocab_size != n_items)
            throw ConfigError("synthetic: sequence field 'item_id' missing or wrong vocab");
        if (find_field(schema.seq_fields, "item_category") < 0)
            throw ConfigError("synthetic: sequence field 'item_category' missing");
    }
}

GeneratedDataset generate_dataset(const SyntheticSpec& spec) {
    spec.validate();
    const auto& schema = spec.schema;
    const int seg_idx = find_field(schema.ns_fields, "user_segment");
    const int cat_idx = find_field(schema.ns_fields, "item_category");
    const int user_idx = find_field(schema.ns_fields, "user_id");
    const int item_idx = find_field(schema.ns_fields, "item_id");
    const int seq_item_idx = find_field(schema.seq_fields, "item_id");
    const int seq_cat_idx = find_field(schema.seq_fields, "item_category");
    const int n_segments = schema.ns_fields[seg_idx].vocab_size;
    const int n_categories = schema.ns_fields[cat_idx].vocab_size;
    if (seq_cat_idx >= 0 && schema.seq_fields[seq_cat_idx].vocab_size < n_categories)
        throw ConfigError("synthetic: sequence item_category vocab smaller than item_category's");

    const PlantedWorld world(spec, n_segments, n_categories);
    const int latent_dim = spec.planted.user_latent_dim;
    const double inv_sqrt_d = 1.0 / std::sqrt(double(latent_dim));
    const int64_t total = spec.n_train + spec.n_test;

    GeneratedDataset out;
    out.schema = schema;
    out.n_train = spec.n_train;
    out.seed = spec.seed;
    out.samples.resize(total);

    const size_t nsf = schema.seq_fields.size();
    const Rng base(spec.seed);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int64_t i = 0; i < total; ++i) {
        // one derived stream per sample keeps any worker layout deterministic
        Rng rng = base.fork(uint64_t(i) + 1);
        Sample& s = out.samples[i];

        const uint32_t user = rng.uniform_int(uint32_t(spec.n_users));
        const uint32_t primary = world.user_primary_cat[user];
        const uint32_t secondary = world.user_secondary_cat[user];

        auto draw_interest_item = [&]() -> uint32_t {
            const double p = rng.uniform();
            if (p < 0.55) {
                const auto& pool = world.items_by_category[primary];
                return pool[rng.uniform_int(uint32_t(pool.size()))];
            }
            if (p < 0.75) {
                const auto& pool = world.items_by_category[secondary];
                return pool[rng.uniform_int(uint32_t(pool.size()))];
            }
            return rng.uniform_int(uint32_t(spec.n_items));
        };

        // candidate: half impressions correlate with the user's interests the
        // way a production retrieval stage would, half are exploratory
        const uint32_t candidate = rng.uniform() < 0.5 ? draw_interest_item()
                                                       : rng.uniform_int(uint32_t(spec.n_items));
        const uint32_t cand_cat = world.item_category[candidate];

        s.ns_ids.assign(schema.ns_fields.size(), 0);
        for (size_t f = 0; f < schema.ns_fields.size(); ++f) {
            const int fi = static_cast<int>(f);
            if (fi == user_idx) s.ns_ids[f] = user;
            else if (fi == seg_idx) s.ns_ids[f] = world.user_segment[user];
            else if (fi == item_idx) s.ns_ids[f] = candidate;
            else if (fi == cat_idx) s.ns_ids[f] = cand_cat;
            else s.ns_ids[f] = rng.uniform_int(uint32_t(schema.ns_fields[f].vocab_size));
        }

        auto fill_sequence = [&](std::vector<uint32_t>& ids, int len) -> std::pair<double, double> {
            ids.assign(size_t(len) * nsf, 0);
            int cat_matches = 0;
            double pop = 0;
            for (int e = 0; e < len; ++e) {
                const uint32_t it = draw_interest_item();
                const uint32_t cat = world.item_category[it];
                for (size_t f = 0; f < nsf; ++f) {
                    const int fi = static_cast<int>(f);
                    if (fi == seq_item_idx) ids[e * nsf + f] = it;
                    else if (fi == seq_cat_idx) ids[e * nsf + f] = cat;
                    else ids[e * nsf + f] = rng.uniform_int(uint32_t(schema.seq_fields[f].vocab_size));
                }
                cat_matches += (cat == cand_cat) ? 1 : 0;
                pop += world.category_pop_score[cat];
            }
            if (len == 0) return {0.0, 0.0};
            const double match = (double(cat_matches) / len - 1.0 / n_categories) * 3.0;
            return {match, pop};
        };

        s.global_len = sample_length(rng, spec.mean_global_len, schema.global_max_len, 1);
        s.realtime_len = sample_length(rng, spec.mean_rt_len, schema.realtime_max_len, 0);
        const auto [g_match, g_pop] = fill_sequence(s.global_ids, s.global_len);
        const auto [r_match, r_pop] = fill_sequence(s.realtime_ids, s.realtime_len);

        const int n_events = s.global_len + s.realtime_len;
        const double pop_pattern = n_events > 0 ? (g_pop + r_pop) / n_events : 0.0;

        double id_affinity = 0;
        for (int z = 0; z < latent_dim; ++z)
            id_affinity += world.user_latent[size_t(user) * latent_dim + z] *
                           world.item_latent[size_t(candidate) * latent_dim + z];
        id_affinity *= inv_sqrt_d;
        const double seg_affinity =
            world.segment_category_affinity[size_t(world.user_segment[user]) * n_categories + cand_cat];

        const double logit = spec.planted.bias +
                             spec.planted.affinity_weight * (seg_affinity + id_affinity) +
                             spec.planted.interest_weight * g_match +
                             spec.planted.recency_weight * r_match +
                             spec.planted.population_weight * pop_pattern +
                             spec.planted.noise_scale * rng.normal();
        s.label = rng.uniform() < sigmoid(logit) ? 1 : 0;
    }

    for (const Sample& s : out.samples) out.positive_count += s.label;
    const double rate = out.positive_rate();
    if (rate <= 0.02 || rate >= 0.5)
        throw ConfigError("synthetic: planted click rate " + std::to_string(rate) +
                          " outside (0.02, 0.5); adjust planted.bias or weights");
    return out;
}

}  // namespace hemix
