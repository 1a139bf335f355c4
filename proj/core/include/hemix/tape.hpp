#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "hemix/matrix.hpp"

namespace hemix {

// Backward was asked for something the tape never recorded.
struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A trainable value with its accumulated gradient.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix gradient;
    int index = -1;  // slot in the owning ParamRegistry

    Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)) {
        gradient = Matrix::zeros(value.rows, value.cols);
    }

    void reset_gradient() { gradient.fill(0); }
    size_t size() const { return value.size(); }
};

// Owns parameters at stable addresses and hands out registry indices.
class ParamRegistry {
public:
    Parameter& create(const std::string& name, int rows, int cols);
    Parameter& add(const std::string& name, Matrix value);
    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;

    size_t count() const { return items_.size(); }
    Parameter& at(size_t i) { return *items_[i]; }
    const Parameter& at(size_t i) const { return *items_[i]; }

    size_t total_values() const;
    void reset_gradients();

private:
    std::vector<std::unique_ptr<Parameter>> items_;
    std::unordered_map<std::string, int> by_name_;
};

// Per-worker gradient accumulator, indexed by Parameter::index. Lets batch
// chunks run in parallel and still reduce into Parameter::gradient in a
// fixed order.
class GradBuffer {
public:
    explicit GradBuffer(size_t n_params) : grads_(n_params) {}

    void add(const Parameter& p, const Matrix& g);
    void add_rows(const Parameter& p, const std::vector<uint32_t>& ids, const Matrix& row_grads);

    // parameter.gradient += buffered gradient, for every touched slot
    void apply(ParamRegistry& registry) const;

private:
    Matrix& slot(const Parameter& p);
    std::vector<Matrix> grads_;
};

class Tape;

// Handle to a recorded value on a tape.
struct Var {
    Tape* tape = nullptr;
    int id = -1;
};

// Recorded forward computation supporting one or more reverse sweeps.
// Recording order is topological order, so backward is a reverse scan.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // --- inputs ---
    Var leaf(Matrix v);                 // constant, no gradient
    Var param(Parameter& p);            // gradient leaf, memoized per tape
    Var embed_rows(Parameter& table, const std::vector<uint32_t>& ids);

    // --- dense ops ---
    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);              // elementwise
    Var scale(Var a, real_t s);
    Var add_row_broadcast(Var a, Var row);  // (m x n) + (1 x n)
    Var relu(Var a);
    Var sigmoid(Var a);
    Var transpose(Var a);
    Var softmax_rows(Var a, int valid_cols = -1);
    Var layer_norm(Var x, Var gain, Var bias, real_t eps = real_t(1e-5));

    // --- structural ops ---
    Var slice_rows(Var a, int r0, int n_rows);
    Var slice_cols(Var a, int c0, int n_cols);
    Var concat_rows(const std::vector<Var>& parts);
    Var concat_cols(const std::vector<Var>& parts);
    Var reshape(Var a, int r, int c);
    // out.flat[i] = in.flat[perm[i]]; perm must be a bijection
    Var permute_flat(Var a, std::shared_ptr<const std::vector<int>> perm, int r, int c);
    Var mean_rows(Var a);               // (m x n) -> (1 x n)
    Var sum_scalars(const std::vector<Var>& xs);

    // --- losses ---
    // -(y log p + (1-y) log(1-p)) with p = clamp(yhat, 1e-7, 1-1e-7)
    Var bce_loss(Var yhat, real_t label);

    const Matrix& val(Var v) const;
    const Matrix& val(int id) const { return *nodes_[id].v; }

    // Accumulates d(loss)/d(param) into every participating Parameter's
    // gradient (or into `sink` when given). May be called repeatedly;
    // contributions accumulate.
    void backward(Var loss, GradBuffer* sink = nullptr);

    void reset();
    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix owned;           // storage for computed nodes
        const Matrix* v = nullptr;
        Matrix grad;            // lazily allocated during backward
        std::function<void(Tape&, const Matrix&)> back;  // pushes grad to inputs
    };

    int push(Matrix value, std::function<void(Tape&, const Matrix&)> back);
    int push_view(const Matrix* view, std::function<void(Tape&, const Matrix&)> back);
    Matrix& grad_acc(int id);   // lazily-zeroed gradient accumulator
    int check(Var v) const;

    std::deque<Node> nodes_;
    std::unordered_map<const Parameter*, int> param_nodes_;
    GradBuffer* sink_ = nullptr;
};

inline constexpr real_t kProbClamp = real_t(1e-7);

}  // namespace hemix
