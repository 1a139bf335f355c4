#include "hemix/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hemix {

namespace flop_counter {
namespace {
thread_local bool g_enabled = false;
thread_local uint64_t g_count = 0;
}  // namespace
void enable(bool on) { g_enabled = on; }
bool enabled() { return g_enabled; }
void reset() { g_count = 0; }
uint64_t count() { return g_count; }
void add(uint64_t flops) {
    if (g_enabled) g_count += flops;
}
}  // namespace flop_counter

namespace kernel_checks {
namespace {
thread_local bool g_enabled = false;
}
void enable(bool on) { g_enabled = on; }
bool enabled() { return g_enabled; }
}  // namespace kernel_checks

Matrix Matrix::filled(int r, int c, real_t v) {
    Matrix m(r, c);
    m.fill(v);
    return m;
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = real_t(1);
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<real_t>> rows_init) {
    const int r = static_cast<int>(rows_init.size());
    const int c = r > 0 ? static_cast<int>(rows_init.begin()->size()) : 0;
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows_init) {
        if (static_cast<int>(row.size()) != c) throw ShapeError("from_rows: ragged initializer");
        std::copy(row.begin(), row.end(), m.row_ptr(i));
        ++i;
    }
    return m;
}

std::string Matrix::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

bool Matrix::all_finite() const {
    for (real_t v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Matrix::fill(real_t v) { std::fill(data.begin(), data.end(), v); }

void Matrix::add_in_place(const Matrix& o) {
    if (!same_shape(o)) throw ShapeError("add_in_place: " + shape_str() + " += " + o.shape_str());
    for (size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
}

real_t max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw ShapeError("max_abs_diff: " + a.shape_str() + " vs " + b.shape_str());
    real_t m = 0;
    for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

void ensure_finite(const Matrix& m, const std::string& what) {
    if (!m.all_finite()) throw NumericError("non-finite value in " + what);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw ShapeError("matmul: " + a.shape_str() + " x " + b.shape_str());
    Matrix out(a.rows, b.cols);
    // ikj order keeps the inner loop contiguous; the k-ascending accumulation
    // order per output entry matches a textbook ijk loop bit for bit.
    for (int i = 0; i < a.rows; ++i) {
        const real_t* arow = a.row_ptr(i);
        real_t* orow = out.row_ptr(i);
        for (int k = 0; k < a.cols; ++k) {
            const real_t aik = arow[k];
            const real_t* brow = b.row_ptr(k);
            for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    flop_counter::add(2ull * a.rows * a.cols * b.cols);
    if (kernel_checks::enabled()) ensure_finite(out, "matmul output");
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

Matrix softmax_rows(const Matrix& x, int valid_cols) {
    if (x.empty()) throw ShapeError("softmax_rows: empty input");
    const int valid = valid_cols < 0 ? x.cols : valid_cols;
    Matrix out(x.rows, x.cols);
    for (int i = 0; i < x.rows; ++i) {
        const real_t* in = x.row_ptr(i);
        real_t* o = out.row_ptr(i);
        real_t mx = -std::numeric_limits<real_t>::infinity();
        for (int j = 0; j < x.cols; ++j) {
            const real_t v = j < valid ? in[j] : in[j] + kSoftmaxMask;
            o[j] = v;
            mx = std::max(mx, v);
        }
        real_t sum = 0;
        for (int j = 0; j < x.cols; ++j) {
            o[j] = std::exp(o[j] - mx);
            sum += o[j];
        }
        const real_t inv = real_t(1) / sum;
        for (int j = 0; j < x.cols; ++j) o[j] *= inv;
    }
    if (kernel_checks::enabled()) ensure_finite(out, "softmax_rows output");
    return out;
}

Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, real_t eps) {
    if (gain.rows != 1 || gain.cols != x.cols || bias.rows != 1 || bias.cols != x.cols)
        throw ShapeError("layer_norm: x " + x.shape_str() + ", gain " + gain.shape_str() +
                         ", bias " + bias.shape_str());
    if (eps <= 0) throw std::invalid_argument("layer_norm: eps must be > 0");
    Matrix out(x.rows, x.cols);
    const int n = x.cols;
    for (int i = 0; i < x.rows; ++i) {
        const real_t* in = x.row_ptr(i);
        real_t* o = out.row_ptr(i);
        real_t mean = 0;
        for (int j = 0; j < n; ++j) mean += in[j];
        mean /= n;
        real_t var = 0;
        for (int j = 0; j < n; ++j) {
            const real_t d = in[j] - mean;
            var += d * d;
        }
        var /= n;
        const real_t inv_std = real_t(1) / std::sqrt(var + eps);
        for (int j = 0; j < n; ++j) o[j] = (in[j] - mean) * inv_std * gain.data[j] + bias.data[j];
    }
    if (kernel_checks::enabled()) ensure_finite(out, "layer_norm output");
    return out;
}

}  // namespace hemix
