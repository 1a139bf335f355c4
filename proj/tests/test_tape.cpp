#include <doctest.h>

#include <cmath>

#include "gradcheck.hpp"
#include "hemix/rng.hpp"
#include "hemix/tape.hpp"

using namespace hemix;
using hemix::test::finite_difference_check;

namespace {

void randomize(Parameter& p, Rng& rng, double lo = -1, double hi = 1) {
    for (auto& v : p.value.data) v = real_t(rng.uniform(lo, hi));
}

// sum of all entries as a scalar, via ones-vector sandwich
Var sum_all(Tape& t, Var x) {
    const Matrix& v = t.val(x);
    Var left = t.leaf(Matrix::filled(1, v.rows, 1));
    Var right = t.leaf(Matrix::filled(v.cols, 1, 1));
    return t.matmul(t.matmul(left, x), right);
}

}  // namespace

TEST_CASE("backward on a linear loss gives all-ones gradient") {
    ParamRegistry params;
    Parameter& w = params.create("w", 2, 2);
    Rng rng(3);
    randomize(w, rng);

    Tape t;
    Var loss = sum_all(t, t.param(w));
    t.backward(loss);
    CHECK(max_abs_diff(w.gradient, Matrix::filled(2, 2, 1)) == 0);
}

TEST_CASE("backward through the elementwise square matches the identity") {
    ParamRegistry params;
    Parameter& w = params.add("w", Matrix::from_rows({{1, 2}, {3, 4}}));
    Tape t;
    Var wv = t.param(w);
    Var loss = t.scale(sum_all(t, t.mul(wv, wv)), real_t(0.5));
    t.backward(loss);
    CHECK(max_abs_diff(w.gradient, w.value) < 1e-12);
}

TEST_CASE("repeated backward accumulates into parameter gradients") {
    ParamRegistry params;
    Parameter& w = params.create("w", 2, 3);
    Rng rng(11);
    randomize(w, rng);
    Tape t;
    Var loss = sum_all(t, t.param(w));
    t.backward(loss);
    t.backward(loss);
    CHECK(max_abs_diff(w.gradient, Matrix::filled(2, 3, 2)) == 0);
}

TEST_CASE("a parameter used twice receives both contributions") {
    ParamRegistry params;
    Parameter& w = params.create("w", 2, 2);
    Rng rng(12);
    randomize(w, rng);
    Tape t;
    Var wv = t.param(w);
    Var loss = sum_all(t, t.add(wv, wv));
    t.backward(loss);
    CHECK(max_abs_diff(w.gradient, Matrix::filled(2, 2, 2)) == 0);
}

TEST_CASE("backward rejects non-scalars and foreign vars") {
    ParamRegistry params;
    Parameter& w = params.create("w", 2, 2);
    Tape t;
    Var wv = t.param(w);
    CHECK_THROWS_AS(t.backward(wv), GraphError);  // 2x2, not a scalar

    Tape other;
    CHECK_THROWS_AS(other.backward(wv), GraphError);  // recorded elsewhere

    Tape reset_tape;
    Var v = sum_all(reset_tape, reset_tape.param(w));
    reset_tape.reset();
    CHECK_THROWS_AS(reset_tape.backward(v), GraphError);  // recording discarded
}

TEST_CASE("embedding rows scatter gradients by id") {
    ParamRegistry params;
    Parameter& table = params.create("table", 5, 3);
    Rng rng(9);
    randomize(table, rng);

    Tape t;
    Var rows = t.embed_rows(table, {1, 3, 1});
    CHECK(t.val(rows).rows == 3);
    for (int j = 0; j < 3; ++j) {
        CHECK(t.val(rows).at(0, j) == table.value.at(1, j));
        CHECK(t.val(rows).at(1, j) == table.value.at(3, j));
    }
    t.backward(sum_all(t, rows));
    for (int j = 0; j < 3; ++j) {
        CHECK(table.gradient.at(1, j) == 2);  // appears twice
        CHECK(table.gradient.at(3, j) == 1);
        CHECK(table.gradient.at(0, j) == 0);
    }
    CHECK_THROWS_AS(t.embed_rows(table, {5}), std::out_of_range);
}

TEST_CASE("gradients can be routed through a GradBuffer") {
    ParamRegistry params;
    Parameter& w = params.create("w", 2, 2);
    Rng rng(21);
    randomize(w, rng);

    Tape t;
    GradBuffer buf(params.count());
    t.backward(sum_all(t, t.param(w)), &buf);
    CHECK(max_abs_diff(w.gradient, Matrix::zeros(2, 2)) == 0);  // untouched
    buf.apply(params);
    CHECK(max_abs_diff(w.gradient, Matrix::filled(2, 2, 1)) == 0);
}

TEST_CASE("finite differences validate every differentiable op") {
    Rng rng(77);
    auto check_fn = [&](const char* what, auto&& build) {
        ParamRegistry params;
        Parameter& a = params.create("a", 3, 4);
        Parameter& b = params.create("b", 4, 3);
        Parameter& row = params.create("row", 1, 4);
        randomize(a, rng, 0.1, 1.0);  // positive keeps relu kinks away
        randomize(b, rng, 0.1, 1.0);
        randomize(row, rng, 0.1, 1.0);
        auto loss = [&]() -> double {
            Tape t;
            return double(t.val(build(t, t.param(a), t.param(b), t.param(row))).data[0]);
        };
        auto analytic = [&]() {
            Tape t;
            t.backward(build(t, t.param(a), t.param(b), t.param(row)));
        };
        const auto result = finite_difference_check(params, loss, analytic);
        INFO(what, " worst entry ", result.worst_param);
        CHECK(result.max_rel_err < 1e-4);
    };

    check_fn("matmul", [](Tape& t, Var a, Var b, Var) { return sum_all(t, t.matmul(a, b)); });
    check_fn("add", [](Tape& t, Var a, Var, Var row) {
        return sum_all(t, t.add(a, t.concat_rows({row, row, row})));
    });
    check_fn("sub", [](Tape& t, Var a, Var, Var row) {
        return sum_all(t, t.sub(a, t.concat_rows({row, row, row})));
    });
    check_fn("mul", [](Tape& t, Var a, Var, Var row) {
        return sum_all(t, t.mul(a, t.concat_rows({row, row, row})));
    });
    check_fn("scale", [](Tape& t, Var a, Var, Var) { return sum_all(t, t.scale(a, real_t(-1.7))); });
    check_fn("add_row_broadcast",
             [](Tape& t, Var a, Var, Var row) { return sum_all(t, t.add_row_broadcast(a, row)); });
    check_fn("relu", [](Tape& t, Var a, Var b, Var) {
        // recentre so the relu sees both signs, away from the kink
        Var shifted = t.sub(t.matmul(a, b), t.leaf(Matrix::filled(3, 3, real_t(1.2))));
        return sum_all(t, t.relu(shifted));
    });
    check_fn("sigmoid", [](Tape& t, Var a, Var, Var) { return sum_all(t, t.sigmoid(a)); });
    check_fn("transpose", [](Tape& t, Var a, Var b, Var) {
        return sum_all(t, t.matmul(t.transpose(a), t.transpose(b)));
    });
    check_fn("softmax_rows", [](Tape& t, Var a, Var, Var) {
        Var weights = t.softmax_rows(t.scale(a, real_t(2)));
        return sum_all(t, t.mul(weights, weights));  // non-uniform downstream gradient
    });
    check_fn("masked softmax", [](Tape& t, Var a, Var, Var) {
        Var weights = t.softmax_rows(t.scale(a, real_t(2)), 3);
        return sum_all(t, t.mul(weights, weights));
    });
    check_fn("layer_norm", [](Tape& t, Var a, Var, Var row) {
        Var gain = t.slice_cols(row, 0, 4);
        Var bias = t.scale(row, real_t(0.3));
        Var y = t.layer_norm(a, gain, bias, real_t(1e-5));
        return sum_all(t, t.mul(y, y));
    });
    check_fn("slices and concats", [](Tape& t, Var a, Var, Var) {
        Var top = t.slice_rows(a, 0, 2);
        Var bottom = t.slice_rows(a, 2, 1);
        Var glued = t.concat_rows({bottom, top});
        Var left = t.slice_cols(glued, 0, 2);
        Var right = t.slice_cols(glued, 2, 2);
        return sum_all(t, t.mul(t.concat_cols({right, left}), glued));
    });
    check_fn("reshape", [](Tape& t, Var a, Var, Var) {
        Var r = t.reshape(a, 4, 3);
        return sum_all(t, t.mul(r, r));
    });
    check_fn("permute_flat", [](Tape& t, Var a, Var, Var) {
        auto perm = std::make_shared<std::vector<int>>(12);
        for (int i = 0; i < 12; ++i) (*perm)[i] = (i * 5) % 12;  // bijection on 12 slots
        Var p = t.permute_flat(a, perm, 2, 6);
        return sum_all(t, t.mul(p, p));
    });
    check_fn("mean_rows", [](Tape& t, Var a, Var, Var) {
        Var m = t.mean_rows(a);
        return sum_all(t, t.mul(m, m));
    });
    check_fn("bce at a mid-range probability", [](Tape& t, Var a, Var, Var) {
        Var p = t.sigmoid(sum_all(t, a));
        return t.bce_loss(p, real_t(1));
    });
    check_fn("sum_scalars", [](Tape& t, Var a, Var b, Var) {
        return t.sum_scalars({sum_all(t, a), sum_all(t, b)});
    });
}

TEST_CASE("embedding gradients also pass finite differences") {
    ParamRegistry params;
    Parameter& table = params.create("table", 6, 3);
    Rng rng(31);
    randomize(table, rng);
    const std::vector<uint32_t> ids{0, 2, 2, 5};
    auto build = [&](Tape& t) {
        Var rows = t.embed_rows(table, ids);
        return sum_all(t, t.mul(rows, rows));
    };
    auto loss = [&]() -> double {
        Tape t;
        return double(t.val(build(t)).data[0]);
    };
    auto analytic = [&]() {
        Tape t;
        t.backward(build(t));
    };
    CHECK(finite_difference_check(params, loss, analytic).max_rel_err < 1e-4);
}

TEST_CASE("scaled-uniform initialization is bit-identical per seed") {
    Matrix a(7, 9), b(7, 9);
    {
        Rng rng(42);
        for (auto& v : a.data) v = real_t(rng.uniform(-1, 1));
    }
    {
        Rng rng(42);
        for (auto& v : b.data) v = real_t(rng.uniform(-1, 1));
    }
    CHECK(max_abs_diff(a, b) == 0);
}
