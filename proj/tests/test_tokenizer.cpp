#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "hemix/tokenizer.hpp"
#include "test_util.hpp"

using namespace hemix;
using namespace hemix::test;

namespace {

Var square_sum(Tape& t, Var x) {
    const Matrix& v = t.val(x);
    Var ones_l = t.leaf(Matrix::filled(1, v.rows, 1));
    Var ones_r = t.leaf(Matrix::filled(v.cols, 1, 1));
    return t.matmul(t.matmul(ones_l, t.mul(x, x)), ones_r);
}

}  // namespace

TEST_CASE("embedding concatenates fields in schema order") {
    FeatureSchema schema;
    schema.ns_fields = {{"f1", FeatureGroup::kUser, 4, 3}, {"f2", FeatureGroup::kItem, 4, 5}};
    schema.seq_fields = {{"item_id", FeatureGroup::kItem, 4, 2}};
    schema.global_max_len = 3;
    schema.realtime_max_len = 2;

    ModelConfig cfg;
    cfg.schema = schema;
    cfg.ns_token_count = 2;
    cfg.token_dim = 4;
    cfg.mix_heads = 2;
    cfg.ns_hidden_dims = {6};

    ParamRegistry params;
    Rng rng(1);
    Tokenizer tok(cfg, params, rng);

    // one-hot style tables make the lookup directly readable
    Parameter* t1 = params.find("embed.ns.f1");
    Parameter* t2 = params.find("embed.ns.f2");
    REQUIRE(t1 != nullptr);
    REQUIRE(t2 != nullptr);
    t1->value.fill(0);
    t2->value.fill(0);
    for (int i = 0; i < 4; ++i) {
        t1->value.at(i, i % 3) = real_t(i + 1);
        t2->value.at(i, i % 5) = real_t(10 + i);
    }

    Sample s;
    s.ns_ids = {2, 3};
    s.global_len = 0;
    s.realtime_len = 0;
    s.label = 1;

    Tape t;
    EmbeddedSample e = tok.embed(t, s);
    const Matrix& ns = t.val(e.ns_concat);
    CHECK(ns.rows == 1);
    CHECK(ns.cols == 8);  // 3 + 5
    CHECK(ns.at(0, 2) == real_t(3));      // f1 row 2 puts 3 at dim 2
    CHECK(ns.at(0, 3 + 3) == real_t(13)); // f2 row 3 puts 13 at dim 3

    // empty sequences come back zero with length zero
    REQUIRE(e.global_seq.has_value());
    CHECK(e.global_len == 0);
    CHECK(max_abs_diff(t.val(*e.global_seq), Matrix::zeros(3, 2)) == 0);
    REQUIRE(e.realtime_seq.has_value());
    CHECK(max_abs_diff(t.val(*e.realtime_seq), Matrix::zeros(2, 2)) == 0);
}

TEST_CASE("embedding rejects out-of-vocabulary ids naming the field") {
    ModelConfig cfg = toy_config();
    ParamRegistry params;
    Rng rng(1);
    Tokenizer tok(cfg, params, rng);
    Rng srng(2);
    Sample s = random_sample(cfg.schema, srng);
    s.ns_ids[2] = 99;  // item_id vocab is 7
    Tape t;
    CHECK_THROWS_AS(tok.embed(t, s), InputError);
}

TEST_CASE("interact-then-split yields contiguous token rows") {
    // single linear identity layer: the split is a pure reshape
    ParamRegistry params;
    Rng rng(3);
    NsInteractMlp mlp("tokenizer.ns_mlp", 6, {}, 2, 3, params, rng);
    Parameter* w = params.find("tokenizer.ns_mlp.w0");
    REQUIRE(w != nullptr);
    w->value = Matrix::identity(6);

    Tape t;
    Var e_ns = t.leaf(Matrix::from_rows({{1, 2, 3, 4, 5, 6}}));
    const Matrix& tokens = t.val(mlp.forward(t, e_ns));
    CHECK(tokens.rows == 2);
    CHECK(tokens.cols == 3);
    CHECK(tokens.at(0, 0) == 1);
    CHECK(tokens.at(0, 2) == 3);
    CHECK(tokens.at(1, 0) == 4);
    CHECK(tokens.at(1, 2) == 6);
}

TEST_CASE("ns interaction MLP sizes its final layer as tokens x width") {
    ParamRegistry params;
    Rng rng(4);
    NsInteractMlp mlp("mlp", 40, {64}, 20, 256, params, rng);
    Parameter* last = params.find("mlp.w1");
    REQUIRE(last != nullptr);
    CHECK(last->value.rows == 64);
    CHECK(last->value.cols == 20 * 256);  // 5120

    Tape t;
    Var in = t.leaf(Matrix::zeros(1, 40));
    const Matrix& out = t.val(mlp.forward(t, in));
    CHECK(out.rows == 20);
    CHECK(out.cols == 256);

    CHECK_THROWS_AS(NsInteractMlp("bad", 8, {0}, 2, 4, params, rng), ConfigError);
}

TEST_CASE("routed query split follows the 4:1 rule with a floor of one") {
    ModelConfig cfg = toy_config();
    cfg.ns_token_count = 20;
    CHECK(cfg.routed_global() == 16);
    CHECK(cfg.routed_realtime() == 4);
    cfg.ns_token_count = 5;
    CHECK(cfg.routed_global() == 4);
    CHECK(cfg.routed_realtime() == 1);
    cfg.ns_token_count = 2;
    CHECK(cfg.routed_global() == 1);
    CHECK(cfg.routed_realtime() == 1);
}

TEST_CASE("token counts match the published configuration") {
    ModelConfig cfg;
    cfg.schema = toy_schema();
    cfg.ns_token_count = 20;
    cfg.token_dim = 256;
    cfg.mix_heads = 8;
    CHECK(cfg.routed_global() == 16);
    CHECK(cfg.fixed_global() == 16);
    CHECK(cfg.routed_realtime() == 4);
    CHECK(cfg.fixed_realtime() == 4);
    CHECK(cfg.global_query_count() == 32);
    CHECK(cfg.realtime_query_count() == 8);
    CHECK(cfg.seq_token_count() == 40);
    CHECK(cfg.seq_token_count() == 2 * cfg.ns_token_count);
    CHECK(cfg.token_count() == 60);

    cfg.ns_token_count = 5;
    CHECK(cfg.token_count() == 15);

    cfg.ns_token_count = 20;
    cfg.ablation.no_fixed_query = true;
    CHECK(cfg.token_count() == 2 * cfg.ns_token_count);
}

TEST_CASE("attention over a single key puts weight one on it") {
    ParamRegistry params;
    Rng rng(5);
    MixedHeteroAttention attn("a", 1, 0, 2, 2, 1, 2, params, rng);
    params.find("a.wq0")->value = Matrix::identity(2);
    params.find("a.wk")->value = Matrix::identity(2);
    params.find("a.wv")->value = Matrix::from_rows({{2, 5}, {0, 0}});
    params.find("a.wo")->value = Matrix::identity(2);

    Tape t;
    Var queries = t.leaf(Matrix::from_rows({{3, -1}}));
    Var seq = t.leaf(Matrix::from_rows({{1, 0}, {0, 0}}));  // one real key, one pad
    const Matrix& out = t.val(attn.forward(t, queries, seq, 1));
    CHECK(out.at(0, 0) == doctest::Approx(2).epsilon(1e-12));
    CHECK(out.at(0, 1) == doctest::Approx(5).epsilon(1e-12));
}

TEST_CASE("attention weights match the scalar softmax oracle") {
    ParamRegistry params;
    Rng rng(6);
    MixedHeteroAttention attn("a", 1, 0, 2, 2, 1, 2, params, rng);
    params.find("a.wq0")->value = Matrix::identity(2);
    params.find("a.wk")->value = Matrix::identity(2);
    params.find("a.wv")->value = Matrix::identity(2);
    params.find("a.wo")->value = Matrix::identity(2);

    Tape t;
    Var queries = t.leaf(Matrix::from_rows({{1, 0}}));
    Var seq = t.leaf(Matrix::from_rows({{1, 0}, {0, 1}}));
    const Matrix& out = t.val(attn.forward(t, queries, seq, 2));
    // scores [1,0]/sqrt(2) -> weights [0.6698, 0.3302]; values are the basis
    CHECK(out.at(0, 0) == doctest::Approx(0.6698).epsilon(1e-3));
    CHECK(out.at(0, 1) == doctest::Approx(0.3302).epsilon(1e-3));
}

TEST_CASE("identical queries with identical projections collapse, distinct ones differ") {
    ParamRegistry params;
    Rng rng(7);
    MixedHeteroAttention attn("a", 3, 0, 4, 4, 1, 5, params, rng);

    Rng srng(8);
    Matrix seq_m(6, 5);
    for (auto& v : seq_m.data) v = real_t(srng.uniform(-1, 1));

    Tape t;
    Matrix q_m(3, 4);
    for (auto& v : q_m.data) v = real_t(srng.uniform(-1, 1));
    Var out_distinct = attn.forward(t, t.leaf(q_m), t.leaf(seq_m), 6);
    real_t max_gap = 0;
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            real_t gap = 0;
            for (int c = 0; c < 4; ++c)
                gap = std::max(gap, std::abs(t.val(out_distinct).at(i, c) - t.val(out_distinct).at(j, c)));
            max_gap = std::max(max_gap, gap);
        }
    CHECK(max_gap > 0);  // heterogeneous projections keep rows distinct

    // force all query projections equal and feed equal query rows
    const Matrix shared = params.find("a.wq0")->value;
    params.find("a.wq1")->value = shared;
    params.find("a.wq2")->value = shared;
    Matrix same_rows(3, 4);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) same_rows.at(i, j) = q_m.at(0, j);
    Tape t2;
    const Matrix& out_same = t2.val(attn.forward(t2, t2.leaf(same_rows), t2.leaf(seq_m), 6));
    for (int i = 1; i < 3; ++i)
        for (int j = 0; j < 4; ++j) CHECK(out_same.at(i, j) == out_same.at(0, j));
}

TEST_CASE("appending extra padded rows never changes attention output") {
    ParamRegistry params;
    Rng rng(9);
    MixedHeteroAttention attn("a", 2, 1, 4, 4, 2, 5, params, rng);

    Rng srng(10);
    Matrix queries(2, 4);
    for (auto& v : queries.data) v = real_t(srng.uniform(-1, 1));
    Matrix seq_short(4, 5), seq_long(9, 5);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j) {
            seq_short.at(i, j) = real_t(srng.uniform(-1, 1));
            seq_long.at(i, j) = seq_short.at(i, j);
        }

    Tape t;
    const Matrix& a = t.val(attn.forward(t, t.leaf(queries), t.leaf(seq_short), 3));
    const Matrix& b = t.val(attn.forward(t, t.leaf(queries), t.leaf(seq_long), 3));
    CHECK(max_abs_diff(a, b) == 0);  // bit-exact
}

TEST_CASE("permuting the real keys leaves pooled outputs unchanged") {
    ParamRegistry params;
    Rng rng(11);
    MixedHeteroAttention attn("a", 2, 2, 4, 4, 1, 5, params, rng);

    Rng srng(12);
    Matrix queries(2, 4), seq(5, 5);
    for (auto& v : queries.data) v = real_t(srng.uniform(-1, 1));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 5; ++j) seq.at(i, j) = real_t(srng.uniform(-1, 1));

    Matrix permuted = seq;
    const int order[4] = {2, 0, 3, 1};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 5; ++j) permuted.at(i, j) = seq.at(order[i], j);

    Tape t;
    const Matrix& a = t.val(attn.forward(t, t.leaf(queries), t.leaf(seq), 4));
    const Matrix& b = t.val(attn.forward(t, t.leaf(queries), t.leaf(permuted), 4));
    CHECK(max_abs_diff(a, b) < 1e-10);
}

TEST_CASE("empty sequences produce zero token rows that stay shape-valid") {
    ModelConfig cfg = toy_config();
    ParamRegistry params;
    Rng rng(13);
    Tokenizer tok(cfg, params, rng);

    Sample s;
    s.ns_ids = {1, 2, 3, 0, 1};
    s.global_len = 0;
    s.realtime_len = 0;

    Tape t;
    const Matrix& tokens = t.val(tok.tokens(t, s));
    const TokenLayout& layout = tok.layout();
    CHECK(tokens.rows == cfg.token_count());
    CHECK(tokens.cols == cfg.token_dim);
    for (int i = 0; i < layout.seq_tokens(); ++i)
        for (int j = 0; j < tokens.cols; ++j) CHECK(tokens.at(i, j) == 0);
    // ns token rows are alive
    real_t ns_mag = 0;
    for (int i = layout.ns_begin(); i < tokens.rows; ++i)
        for (int j = 0; j < tokens.cols; ++j) ns_mag = std::max(ns_mag, std::abs(tokens.at(i, j)));
    CHECK(ns_mag > 0);
}

TEST_CASE("fixed-query rows ignore the candidate item, routed rows do not") {
    ModelConfig cfg = toy_config();
    ParamRegistry params;
    Rng rng(14);
    Tokenizer tok(cfg, params, rng);

    Rng srng(15);
    Sample a = random_sample(cfg.schema, srng, 2, 1);
    Sample b = a;
    b.ns_ids[2] = (a.ns_ids[2] + 1) % 7;  // item_id
    b.ns_ids[3] = (a.ns_ids[3] + 1) % 4;  // item_category

    Tape t;
    const Matrix ta = t.val(tok.tokens(t, a));
    const Matrix tb = t.val(tok.tokens(t, b));
    const TokenLayout& layout = tok.layout();

    auto rows_equal = [&](int begin, int count) {
        for (int i = begin; i < begin + count; ++i)
            for (int j = 0; j < ta.cols; ++j)
                if (ta.at(i, j) != tb.at(i, j)) return false;
        return true;
    };
    CHECK(rows_equal(layout.global_fixed_begin(), layout.global_fixed));
    CHECK(rows_equal(layout.realtime_fixed_begin(), layout.realtime_fixed));
    CHECK(!rows_equal(layout.global_begin(), layout.global_routed));
    CHECK(!rows_equal(layout.realtime_begin(), layout.realtime_routed));
}

TEST_CASE("autosplit baseline keeps token shape parity and bias pattern") {
    ModelConfig cfg = toy_config();
    cfg.ablation.autosplit_tokenizer = true;
    ParamRegistry params;
    Rng rng(16);
    Tokenizer tok(cfg, params, rng);

    Parameter* bias = params.find("tokenizer.autosplit.global.b");
    REQUIRE(bias != nullptr);
    for (size_t i = 0; i < bias->value.data.size(); ++i) bias->value.data[i] = real_t(i);

    Sample s;
    s.ns_ids = {1, 2, 3, 0, 1};
    s.global_len = 0;
    s.realtime_len = 0;

    Tape t;
    const Matrix& tokens = t.val(tok.tokens(t, s));
    CHECK(tokens.rows == cfg.token_count());  // parity with the full model
    CHECK(tokens.cols == cfg.token_dim);
    // zero-length sequence: global token rows equal the bias pattern
    for (int i = 0; i < cfg.global_query_count(); ++i)
        for (int j = 0; j < cfg.token_dim; ++j)
            CHECK(tokens.at(i, j) == real_t(i * cfg.token_dim + j));
}

TEST_CASE("gradients flow through the whole tokenizer") {
    ModelConfig cfg = toy_config();
    cfg.token_dim = 4;
    cfg.attn_dim = 4;
    cfg.ns_hidden_dims = {6};
    ParamRegistry params;
    Rng rng(17);
    Tokenizer tok(cfg, params, rng);

    Rng srng(18);
    const Sample sample = random_sample(cfg.schema, srng, 2, 1);

    auto loss = [&]() -> double {
        Tape t;
        return double(t.val(square_sum(t, tok.tokens(t, sample))).data[0]);
    };
    auto analytic = [&]() {
        Tape t;
        t.backward(square_sum(t, tok.tokens(t, sample)));
    };
    const auto result = finite_difference_check(params, loss, analytic);
    INFO("worst entry ", result.worst_param);
    CHECK(result.max_rel_err < 1e-4);
}
