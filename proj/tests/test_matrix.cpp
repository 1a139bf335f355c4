#include <doctest.h>

#include <cmath>

#include "hemix/matrix.hpp"
#include "hemix/rng.hpp"

using namespace hemix;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double lo = -1, double hi = 1) {
    Matrix m(r, c);
    for (auto& v : m.data) v = real_t(rng.uniform(lo, hi));
    return m;
}

}  // namespace

TEST_CASE("matmul identity, hand arithmetic and zero cases") {
    const Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    CHECK(max_abs_diff(matmul(Matrix::identity(2), a), a) == 0);

    const Matrix row = Matrix::from_rows({{1, 2}});
    const Matrix col = Matrix::from_rows({{3}, {4}});
    const Matrix prod = matmul(row, col);
    CHECK(prod.rows == 1);
    CHECK(prod.cols == 1);
    CHECK(prod.data[0] == real_t(11));

    const Matrix zero = Matrix::zeros(2, 2);
    Rng rng(7);
    const Matrix b = random_matrix(2, 5, rng);
    CHECK(max_abs_diff(matmul(zero, b), Matrix::zeros(2, 5)) == 0);
}

TEST_CASE("matmul rejects mismatched shapes and names both") {
    const Matrix a(2, 3), b(4, 5);
    CHECK_THROWS_WITH_AS(matmul(a, b), "matmul: 2x3 x 4x5", ShapeError);
}

TEST_CASE("matmul associativity on random matrices") {
    Rng rng(123);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(3, 4, rng);
        const Matrix b = random_matrix(4, 5, rng);
        const Matrix c = random_matrix(5, 2, rng);
        const Matrix left = matmul(matmul(a, b), c);
        const Matrix right = matmul(a, matmul(b, c));
        CHECK(max_abs_diff(left, right) < 1e-8);
    }
}

TEST_CASE("softmax symmetry, stability and scalar oracle") {
    const Matrix flat = softmax_rows(Matrix::from_rows({{0, 0}}));
    CHECK(flat.data[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(flat.data[1] == doctest::Approx(0.5).epsilon(1e-12));

    const Matrix big = softmax_rows(Matrix::from_rows({{1000, 1000}}));
    CHECK(big.data[0] == doctest::Approx(0.5).epsilon(1e-12));

    // exp(0.7071) / (exp(0.7071) + 1)
    const Matrix two = softmax_rows(Matrix::from_rows({{0.7071, 0}}));
    CHECK(two.data[0] == doctest::Approx(0.6698).epsilon(1e-4));
    CHECK(two.data[1] == doctest::Approx(0.3302).epsilon(1e-4));
}

TEST_CASE("softmax rows sum to one for random inputs") {
    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix x = random_matrix(4, 7, rng, -50, 50);
        const Matrix y = softmax_rows(x);
        for (int i = 0; i < y.rows; ++i) {
            real_t sum = 0;
            for (int j = 0; j < y.cols; ++j) {
                sum += y.at(i, j);
                CHECK(y.at(i, j) >= 0);
            }
            CHECK(std::abs(sum - 1) < 1e-9);
        }
    }
}

TEST_CASE("masked softmax zeroes padded columns exactly") {
    Rng rng(5);
    const Matrix x = random_matrix(3, 6, rng, -5, 5);
    const Matrix y = softmax_rows(x, 4);
    for (int i = 0; i < 3; ++i) {
        CHECK(y.at(i, 4) == 0);
        CHECK(y.at(i, 5) == 0);
    }
    // matches the softmax of the unpadded slice bit for bit
    Matrix trimmed(3, 4);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) trimmed.at(i, j) = x.at(i, j);
    const Matrix yt = softmax_rows(trimmed);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) CHECK(y.at(i, j) == yt.at(i, j));
}

TEST_CASE("layer_norm constant, already-normalized and hand-computed rows") {
    const Matrix gain4 = Matrix::filled(1, 4, 1), bias4 = Matrix::zeros(1, 4);
    const Matrix constant = layer_norm(Matrix::from_rows({{5, 5, 5, 5}}), gain4, bias4);
    for (real_t v : constant.data) CHECK(std::abs(v) < 1e-6);

    const Matrix gain2 = Matrix::filled(1, 2, 1), bias2 = Matrix::zeros(1, 2);
    const Matrix pre = layer_norm(Matrix::from_rows({{1, -1}}), gain2, bias2, real_t(1e-12));
    CHECK(pre.data[0] == doctest::Approx(1).epsilon(1e-9));
    CHECK(pre.data[1] == doctest::Approx(-1).epsilon(1e-9));

    const Matrix gain3 = Matrix::filled(1, 3, 1), bias3 = Matrix::zeros(1, 3);
    const Matrix three = layer_norm(Matrix::from_rows({{1, 2, 3}}), gain3, bias3, real_t(1e-12));
    CHECK(three.data[0] == doctest::Approx(-1.2247).epsilon(1e-4));
    CHECK(three.data[1] == doctest::Approx(0).epsilon(1e-6));
    CHECK(three.data[2] == doctest::Approx(1.2247).epsilon(1e-4));
}

TEST_CASE("layer_norm output statistics on random rows") {
    Rng rng(41);
    const Matrix gain = Matrix::filled(1, 16, 1), bias = Matrix::zeros(1, 16);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix x = random_matrix(5, 16, rng, -3, 3);
        const Matrix y = layer_norm(x, gain, bias, real_t(1e-12));
        for (int i = 0; i < y.rows; ++i) {
            real_t mean = 0, var = 0;
            for (int j = 0; j < y.cols; ++j) mean += y.at(i, j);
            mean /= y.cols;
            for (int j = 0; j < y.cols; ++j) var += (y.at(i, j) - mean) * (y.at(i, j) - mean);
            var /= y.cols;
            CHECK(std::abs(mean) < 1e-8);
            CHECK(std::abs(var - 1) < 1e-6);
        }
    }
}

TEST_CASE("rng reproduces identical streams per seed") {
    Rng a(2024), b(2024), c(2025);
    bool all_same = true, any_diff = false;
    for (int i = 0; i < 1000; ++i) {
        const uint64_t va = a.next_u64(), vb = b.next_u64(), vc = c.next_u64();
        all_same = all_same && (va == vb);
        any_diff = any_diff || (va != vc);
    }
    CHECK(all_same);
    CHECK(any_diff);

    Rng n1(7), n2(7);
    for (int i = 0; i < 100; ++i) CHECK(n1.normal() == n2.normal());
}

TEST_CASE("flop counter tracks matmul multiply-accumulates") {
    flop_counter::enable(true);
    flop_counter::reset();
    Rng rng(1);
    const Matrix a = random_matrix(3, 4, rng), b = random_matrix(4, 5, rng);
    (void)matmul(a, b);
    CHECK(flop_counter::count() == 2ull * 3 * 4 * 5);
    flop_counter::enable(false);
}

TEST_CASE("ensure_finite flags NaN with the layer name") {
    Matrix m = Matrix::zeros(2, 2);
    m.data[3] = std::nan("");
    CHECK_THROWS_AS(ensure_finite(m, "test stage"), NumericError);
    CHECK(Matrix::zeros(1, 1).all_finite());
    CHECK(!m.all_finite());
}
