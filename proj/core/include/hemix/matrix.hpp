#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace hemix {

#ifdef HEMIX_FLOAT32
using real_t = float;
#else
using real_t = double;
#endif

// Operand shapes do not line up.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A NaN/Inf showed up where finite math is required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense row-major matrix. Row vectors are 1 x n matrices.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<real_t> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, real_t(0)) {}

    static Matrix zeros(int r, int c) { return Matrix(r, c); }
    static Matrix filled(int r, int c, real_t v);
    static Matrix identity(int n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<real_t>> rows);

    real_t& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    real_t at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    real_t* row_ptr(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const real_t* row_ptr(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    size_t size() const { return data.size(); }
    bool empty() const { return data.empty(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    std::string shape_str() const;

    bool all_finite() const;
    void fill(real_t v);

    // this += other, shapes must match
    void add_in_place(const Matrix& o);
};

// Max |a - b| over all entries; shapes must match.
real_t max_abs_diff(const Matrix& a, const Matrix& b);

// Throws NumericError naming `what` if any entry is NaN/Inf.
void ensure_finite(const Matrix& m, const std::string& what);

// Standard matrix product. Throws ShapeError naming both shapes on mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& a);

// Row-wise softmax with max-subtraction. Entries in columns >= valid_cols
// get an additive -1e9 mask before the softmax; valid_cols < 0 means all
// columns are valid.
Matrix softmax_rows(const Matrix& x, int valid_cols = -1);

inline constexpr real_t kSoftmaxMask = real_t(-1e9);

// Row-wise layer normalization (population variance) followed by the
// affine transform gain * xhat + bias. gain/bias are 1 x cols.
Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, real_t eps = real_t(1e-5));

// Multiply-accumulate counter for matmul, used by the FLOP estimator tests.
// Thread-local; disabled by default.
namespace flop_counter {
void enable(bool on);
bool enabled();
void reset();
uint64_t count();
void add(uint64_t flops);
}  // namespace flop_counter

// Per-op finiteness checks for test builds; off by default.
namespace kernel_checks {
void enable(bool on);
bool enabled();
}  // namespace kernel_checks

}  // namespace hemix
