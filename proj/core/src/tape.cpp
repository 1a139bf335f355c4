#include "hemix/tape.hpp"

#include <algorithm>
#include <cmath>

namespace hemix {

// ---------------------------------------------------------------------------
// ParamRegistry

Parameter& ParamRegistry::create(const std::string& name, int rows, int cols) {
    return add(name, Matrix::zeros(rows, cols));
}

Parameter& ParamRegistry::add(const std::string& name, Matrix value) {
    if (by_name_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter>(name, std::move(value));
    p->index = static_cast<int>(items_.size());
    by_name_[name] = p->index;
    items_.push_back(std::move(p));
    return *items_.back();
}

Parameter* ParamRegistry::find(const std::string& name) {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : items_[it->second].get();
}

const Parameter* ParamRegistry::find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? nullptr : items_[it->second].get();
}

size_t ParamRegistry::total_values() const {
    size_t n = 0;
    for (const auto& p : items_) n += p->size();
    return n;
}

void ParamRegistry::reset_gradients() {
    for (auto& p : items_) p->reset_gradient();
}

// ---------------------------------------------------------------------------
// GradBuffer

Matrix& GradBuffer::slot(const Parameter& p) {
    if (p.index < 0 || p.index >= static_cast<int>(grads_.size()))
        throw GraphError("parameter '" + p.name + "' is not registered with this buffer");
    Matrix& g = grads_[p.index];
    if (g.empty()) g = Matrix::zeros(p.value.rows, p.value.cols);
    return g;
}

void GradBuffer::add(const Parameter& p, const Matrix& g) { slot(p).add_in_place(g); }

void GradBuffer::add_rows(const Parameter& p, const std::vector<uint32_t>& ids,
                          const Matrix& row_grads) {
    Matrix& g = slot(p);
    for (size_t r = 0; r < ids.size(); ++r) {
        real_t* dst = g.row_ptr(static_cast<int>(ids[r]));
        const real_t* src = row_grads.row_ptr(static_cast<int>(r));
        for (int j = 0; j < g.cols; ++j) dst[j] += src[j];
    }
}

void GradBuffer::apply(ParamRegistry& registry) const {
    for (size_t i = 0; i < grads_.size(); ++i) {
        if (!grads_[i].empty()) registry.at(i).gradient.add_in_place(grads_[i]);
    }
}

// ---------------------------------------------------------------------------
// Backward helpers: accumulate matmul gradients without materializing
// transposes. g is the output gradient of out = a @ b.

namespace {

// da(i,k) += sum_j g(i,j) * b(k,j)
void acc_grad_a(Matrix& da, const Matrix& g, const Matrix& b) {
    for (int i = 0; i < da.rows; ++i) {
        const real_t* grow = g.row_ptr(i);
        real_t* drow = da.row_ptr(i);
        for (int k = 0; k < da.cols; ++k) {
            const real_t* brow = b.row_ptr(k);
            real_t acc = 0;
            for (int j = 0; j < g.cols; ++j) acc += grow[j] * brow[j];
            drow[k] += acc;
        }
    }
}

// db(k,j) += sum_i a(i,k) * g(i,j)
void acc_grad_b(Matrix& db, const Matrix& a, const Matrix& g) {
    for (int i = 0; i < a.rows; ++i) {
        const real_t* arow = a.row_ptr(i);
        const real_t* grow = g.row_ptr(i);
        for (int k = 0; k < a.cols; ++k) {
            const real_t aik = arow[k];
            real_t* drow = db.row_ptr(k);
            for (int j = 0; j < g.cols; ++j) drow[j] += aik * grow[j];
        }
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Tape

int Tape::check(Var v) const {
    if (v.tape != this || v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
        throw GraphError("var is not a value recorded on this tape");
    return v.id;
}

int Tape::push(Matrix value, std::function<void(Tape&, const Matrix&)> back) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.owned = std::move(value);
    n.v = &n.owned;
    n.back = std::move(back);
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::push_view(const Matrix* view, std::function<void(Tape&, const Matrix&)> back) {
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.v = view;
    n.back = std::move(back);
    return static_cast<int>(nodes_.size()) - 1;
}

Matrix& Tape::grad_acc(int id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Matrix::zeros(n.v->rows, n.v->cols);
    return n.grad;
}

Var Tape::leaf(Matrix v) { return {this, push(std::move(v), nullptr)}; }

Var Tape::param(Parameter& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return {this, it->second};
    Parameter* pp = &p;
    int id = push_view(&p.value, [pp](Tape& t, const Matrix& g) {
        if (t.sink_)
            t.sink_->add(*pp, g);
        else
            pp->gradient.add_in_place(g);
    });
    param_nodes_[&p] = id;
    return {this, id};
}

Var Tape::embed_rows(Parameter& table, const std::vector<uint32_t>& ids) {
    Matrix out(static_cast<int>(ids.size()), table.value.cols);
    for (size_t r = 0; r < ids.size(); ++r) {
        if (static_cast<int>(ids[r]) >= table.value.rows)
            throw std::out_of_range("embed_rows: id " + std::to_string(ids[r]) +
                                    " out of range for table '" + table.name + "' (" +
                                    std::to_string(table.value.rows) + " rows)");
        std::copy_n(table.value.row_ptr(static_cast<int>(ids[r])), table.value.cols,
                    out.row_ptr(static_cast<int>(r)));
    }
    Parameter* pp = &table;
    auto ids_copy = std::make_shared<std::vector<uint32_t>>(ids);
    return {this, push(std::move(out), [pp, ids_copy](Tape& t, const Matrix& g) {
                if (t.sink_) {
                    t.sink_->add_rows(*pp, *ids_copy, g);
                } else {
                    for (size_t r = 0; r < ids_copy->size(); ++r) {
                        real_t* dst = pp->gradient.row_ptr(static_cast<int>((*ids_copy)[r]));
                        const real_t* src = g.row_ptr(static_cast<int>(r));
                        for (int j = 0; j < g.cols; ++j) dst[j] += src[j];
                    }
                }
            })};
}

Var Tape::matmul(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    Matrix out = hemix::matmul(val(ia), val(ib));
    return {this, push(std::move(out), [ia, ib](Tape& t, const Matrix& g) {
                acc_grad_a(t.grad_acc(ia), g, t.val(ib));
                acc_grad_b(t.grad_acc(ib), t.val(ia), g);
            })};
}

Var Tape::add(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    const Matrix &va = val(ia), &vb = val(ib);
    if (!va.same_shape(vb)) throw ShapeError("add: " + va.shape_str() + " + " + vb.shape_str());
    Matrix out = va;
    out.add_in_place(vb);
    return {this, push(std::move(out), [ia, ib](Tape& t, const Matrix& g) {
                t.grad_acc(ia).add_in_place(g);
                t.grad_acc(ib).add_in_place(g);
            })};
}

Var Tape::sub(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    const Matrix &va = val(ia), &vb = val(ib);
    if (!va.same_shape(vb)) throw ShapeError("sub: " + va.shape_str() + " - " + vb.shape_str());
    Matrix out = va;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= vb.data[i];
    return {this, push(std::move(out), [ia, ib](Tape& t, const Matrix& g) {
                t.grad_acc(ia).add_in_place(g);
                Matrix& gb = t.grad_acc(ib);
                for (size_t i = 0; i < gb.data.size(); ++i) gb.data[i] -= g.data[i];
            })};
}

Var Tape::mul(Var a, Var b) {
    const int ia = check(a), ib = check(b);
    const Matrix &va = val(ia), &vb = val(ib);
    if (!va.same_shape(vb)) throw ShapeError("mul: " + va.shape_str() + " * " + vb.shape_str());
    Matrix out = va;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= vb.data[i];
    return {this, push(std::move(out), [ia, ib](Tape& t, const Matrix& g) {
                Matrix& ga = t.grad_acc(ia);
                Matrix& gb = t.grad_acc(ib);
                const Matrix &xa = t.val(ia), &xb = t.val(ib);
                for (size_t i = 0; i < g.data.size(); ++i) {
                    ga.data[i] += g.data[i] * xb.data[i];
                    gb.data[i] += g.data[i] * xa.data[i];
                }
            })};
}

Var Tape::scale(Var a, real_t s) {
    const int ia = check(a);
    Matrix out = val(ia);
    for (real_t& v : out.data) v *= s;
    return {this, push(std::move(out), [ia, s](Tape& t, const Matrix& g) {
                Matrix& ga = t.grad_acc(ia);
                for (size_t i = 0; i < ga.data.size(); ++i) ga.data[i] += s * g.data[i];
            })};
}

Var Tape::add_row_broadcast(Var a, Var row) {
    const int ia = check(a), ir = check(row);
    const Matrix &va = val(ia), &vr = val(ir);
    if (vr.rows != 1 || vr.cols != va.cols)
        throw ShapeError("add_row_broadcast: " + va.shape_str() + " + " + vr.shape_str());
    Matrix out = va;
    for (int i = 0; i < out.rows; ++i) {
        real_t* orow = out.row_ptr(i);
        for (int j = 0; j < out.cols; ++j) orow[j] += vr.data[j];
    }
    return {this, push(std::move(out), [ia, ir](Tape& t, const Matrix& g) {
                t.grad_acc(ia).add_in_place(g);
                Matrix& gr = t.grad_acc(ir);
                for (int i = 0; i < g.rows; ++i) {
                    const real_t* grow = g.row_ptr(i);
                    for (int j = 0; j < g.cols; ++j) gr.data[j] += grow[j];
                }
            })};
}

Var Tape::relu(Var a) {
    const int ia = check(a);
    Matrix out = val(ia);
    for (real_t& v : out.data) v = std::max(v, real_t(0));
    return {this, push(std::move(out), [ia](Tape& t, const Matrix& g) {
                Matrix& ga = t.grad_acc(ia);
                const Matrix& x = t.val(ia);
                for (size_t i = 0; i < g.data.size(); ++i)
                    if (x.data[i] > 0) ga.data[i] += g.data[i];
            })};
}

Var Tape::sigmoid(Var a) {
    const int ia = check(a);
    Matrix out = val(ia);
    for (real_t& v : out.data) v = real_t(1) / (real_t(1) + std::exp(-v));
    const int self = static_cast<int>(nodes_.size());
    return {this, push(std::move(out), [ia, self](Tape& t, const Matrix& g) {
                Matrix& ga = t.grad_acc(ia);
                const Matrix& y = t.val(self);
                for (size_t i = 0; i < g.data.size(); ++i)
                    ga.data[i] += g.data[i] * y.data[i] * (real_t(1) - y.data[i]);
            })};
}

Var Tape::transpose(Var a) {
    const int ia = check(a);
    return {this, push(hemix::transpose(val(ia)), [ia](Tape& t, const Matrix& g) {
                Matrix& ga = t.grad_acc(ia);
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j) ga.at(j, i) += g.at(i, j);
            })};
}

Var Tape::softmax_rows(Var a, int valid_cols) {
    const int ia = check(a);
    Matrix out = hemix::softmax_rows(val(ia), valid_cols);
    const int self = static_cast<int>(nodes_.size());
    return {this, push(std::move(out), [ia, self](Tape& t, const Matrix& g) {
                // dx = y * (g - sum_j g_j y_j); masked columns carry y == 0
                Matrix& ga = t.grad_acc(ia);
                const Matrix& y = t.val(self);
                for (int i = 0; i < g.rows; ++i) {
                    const real_t* yrow = y.row_ptr(i);
                    const real_t* grow = g.row_ptr(i);
                    real_t dot = 0;
                    for (int j = 0; j < g.cols; ++j) dot += grow[j] * yrow[j];
                    real_t* garow = ga.row_ptr(i);
                    for (int j = 0; j < g.cols; ++j) garow[j] += yrow[j] * (grow[j] - dot);
                }
            })};
}

Var Tape::layer_norm(Var x, Var gain, Var bias, real_t eps) {
    const int ix = check(x), ign = check(gain), ibs = check(bias);
    Matrix out = hemix::layer_norm(val(ix), val(ign), val(ibs), eps);
    return {this, push(std::move(out), [ix, ign, ibs, eps](Tape& t, const Matrix& g) {
                const Matrix& xin = t.val(ix);
                const Matrix& gn = t.val(ign);
                Matrix& gx = t.grad_acc(ix);
                Matrix& ggn = t.grad_acc(ign);
                Matrix& gbs = t.grad_acc(ibs);
                const int n = xin.cols;
                std::vector<real_t> xhat(n);
                for (int i = 0; i < xin.rows; ++i) {
                    const real_t* xr = xin.row_ptr(i);
                    const real_t* gr = g.row_ptr(i);
                    real_t mean = 0;
                    for (int j = 0; j < n; ++j) mean += xr[j];
                    mean /= n;
                    real_t var = 0;
                    for (int j = 0; j < n; ++j) {
                        const real_t d = xr[j] - mean;
                        var += d * d;
                    }
                    var /= n;
                    const real_t inv_std = real_t(1) / std::sqrt(var + eps);
                    real_t h_mean = 0, hx_mean = 0;
                    for (int j = 0; j < n; ++j) {
                        xhat[j] = (xr[j] - mean) * inv_std;
                        const real_t h = gr[j] * gn.data[j];
                        h_mean += h;
                        hx_mean += h * xhat[j];
                    }
                    h_mean /= n;
                    hx_mean /= n;
                    real_t* gxr = gx.row_ptr(i);
                    for (int j = 0; j < n; ++j) {
                        const real_t h = gr[j] * gn.data[j];
                        gxr[j] += inv_std * (h - h_mean - xhat[j] * hx_mean);
                        ggn.data[j] += gr[j] * xhat[j];
                        gbs.data[j] += gr[j];
                    }
                }
            })};
}

Var Tape::slice_rows(Var a, int r0, int n_rows) {
    const int ia = check(a);
    const Matrix& va = val(ia);
    if (r0 < 0 || n_rows < 0 || r0 + n_rows > va.rows)
        throw ShapeError("slice_rows: [" + std::to_string(r0) + ", " + std::to_string(r0 + n_rows) +
                         ") of " + va.shape_str());
    Matrix out(n_rows, va.cols);
    std::copy_n(va.row_ptr(r0), static_cast<size_t>(n_rows) * va.cols, out.data.data());
    return {this, push(std::move(out), [ia, r0](Tape& t, const Matrix& g) {
                Matrix& ga = t.grad_acc(ia);
                for (int i = 0; i < g.rows; ++i) {
                    real_t* dst = ga.row_ptr(r0 + i);
                    const real_t* src = g.row_ptr(i);
                    for (int j = 0; j < g.cols; ++j) dst[j] += src[j];
                }
            })};
}

Var Tape::slice_cols(Var a, int c0, int n_cols) {
    const int ia = check(a);
    const Matrix& va = val(ia);
    if (c0 < 0 || n_cols < 0 || c0 + n_cols > va.cols)
        throw ShapeError("slice_cols: [" + std::to_string(c0) + ", " + std::to_string(c0 + n_cols) +
                         ") of " + va.shape_str());
    Matrix out(va.rows, n_cols);
    for (int i = 0; i < va.rows; ++i)
        std::copy_n(va.row_ptr(i) + c0, n_cols, out.row_ptr(i));
    return {this, push(std::move(out), [ia, c0](Tape& t, const Matrix& g) {
                Matrix& ga = t.grad_acc(ia);
                for (int i = 0; i < g.rows; ++i) {
                    real_t* dst = ga.row_ptr(i) + c0;
                    const real_t* src = g.row_ptr(i);
                    for (int j = 0; j < g.cols; ++j) dst[j] += src[j];
                }
            })};
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no parts");
    std::vector<int> ids;
    ids.reserve(parts.size());
    int rows = 0;
    const int cols = val(check(parts[0])).cols;
    for (Var p : parts) {
        const int ip = check(p);
        if (val(ip).cols != cols)
            throw ShapeError("concat_rows: column mismatch " + val(ip).shape_str());
        rows += val(ip).rows;
        ids.push_back(ip);
    }
    Matrix out(rows, cols);
    int r = 0;
    for (int ip : ids) {
        const Matrix& v = val(ip);
        std::copy_n(v.data.data(), v.size(), out.row_ptr(r));
        r += v.rows;
    }
    return {this, push(std::move(out), [ids](Tape& t, const Matrix& g) {
                int r = 0;
                for (int ip : ids) {
                    Matrix& ga = t.grad_acc(ip);
                    for (int i = 0; i < ga.rows; ++i) {
                        const real_t* src = g.row_ptr(r + i);
                        real_t* dst = ga.row_ptr(i);
                        for (int j = 0; j < g.cols; ++j) dst[j] += src[j];
                    }
                    r += ga.rows;
                }
            })};
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no parts");
    std::vector<int> ids;
    ids.reserve(parts.size());
    int cols = 0;
    const int rows = val(check(parts[0])).rows;
    for (Var p : parts) {
        const int ip = check(p);
        if (val(ip).rows != rows)
            throw ShapeError("concat_cols: row mismatch " + val(ip).shape_str());
        cols += val(ip).cols;
        ids.push_back(ip);
    }
    Matrix out(rows, cols);
    int c = 0;
    for (int ip : ids) {
        const Matrix& v = val(ip);
        for (int i = 0; i < rows; ++i) std::copy_n(v.row_ptr(i), v.cols, out.row_ptr(i) + c);
        c += v.cols;
    }
    return {this, push(std::move(out), [ids](Tape& t, const Matrix& g) {
                int c = 0;
                for (int ip : ids) {
                    Matrix& ga = t.grad_acc(ip);
                    for (int i = 0; i < g.rows; ++i) {
                        const real_t* src = g.row_ptr(i) + c;
                        real_t* dst = ga.row_ptr(i);
                        for (int j = 0; j < ga.cols; ++j) dst[j] += src[j];
                    }
                    c += ga.cols;
                }
            })};
}

Var Tape::reshape(Var a, int r, int c) {
    const int ia = check(a);
    const Matrix& va = val(ia);
    if (static_cast<size_t>(r) * c != va.size())
        throw ShapeError("reshape: " + va.shape_str() + " -> " + std::to_string(r) + "x" +
                         std::to_string(c));
    Matrix out(r, c);
    out.data = va.data;
    return {this, push(std::move(out), [ia](Tape& t, const Matrix& g) {
                Matrix& ga = t.grad_acc(ia);
                for (size_t i = 0; i < g.data.size(); ++i) ga.data[i] += g.data[i];
            })};
}

Var Tape::permute_flat(Var a, std::shared_ptr<const std::vector<int>> perm, int r, int c) {
    const int ia = check(a);
    const Matrix& va = val(ia);
    if (perm->size() != va.size() || static_cast<size_t>(r) * c != va.size())
        throw ShapeError("permute_flat: " + va.shape_str() + " with perm of size " +
                         std::to_string(perm->size()));
    Matrix out(r, c);
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = va.data[(*perm)[i]];
    return {this, push(std::move(out), [ia, perm](Tape& t, const Matrix& g) {
                Matrix& ga = t.grad_acc(ia);
                for (size_t i = 0; i < g.data.size(); ++i) ga.data[(*perm)[i]] += g.data[i];
            })};
}

Var Tape::mean_rows(Var a) {
    const int ia = check(a);
    const Matrix& va = val(ia);
    if (va.rows == 0) throw ShapeError("mean_rows: empty input");
    Matrix out(1, va.cols);
    for (int i = 0; i < va.rows; ++i) {
        const real_t* src = va.row_ptr(i);
        for (int j = 0; j < va.cols; ++j) out.data[j] += src[j];
    }
    const real_t inv = real_t(1) / va.rows;
    for (real_t& v : out.data) v *= inv;
    return {this, push(std::move(out), [ia](Tape& t, const Matrix& g) {
                Matrix& ga = t.grad_acc(ia);
                const real_t inv = real_t(1) / ga.rows;
                for (int i = 0; i < ga.rows; ++i) {
                    real_t* dst = ga.row_ptr(i);
                    for (int j = 0; j < ga.cols; ++j) dst[j] += g.data[j] * inv;
                }
            })};
}

Var Tape::sum_scalars(const std::vector<Var>& xs) {
    if (xs.empty()) throw ShapeError("sum_scalars: no inputs");
    std::vector<int> ids;
    ids.reserve(xs.size());
    real_t total = 0;
    for (Var x : xs) {
        const int ix = check(x);
        if (val(ix).rows != 1 || val(ix).cols != 1)
            throw ShapeError("sum_scalars: non-scalar input " + val(ix).shape_str());
        total += val(ix).data[0];
        ids.push_back(ix);
    }
    Matrix out(1, 1);
    out.data[0] = total;
    return {this, push(std::move(out), [ids](Tape& t, const Matrix& g) {
                for (int ix : ids) t.grad_acc(ix).data[0] += g.data[0];
            })};
}

Var Tape::bce_loss(Var yhat, real_t label) {
    const int iy = check(yhat);
    const Matrix& vy = val(iy);
    if (vy.rows != 1 || vy.cols != 1) throw ShapeError("bce_loss: yhat must be 1x1");
    const real_t lo = kProbClamp, hi = real_t(1) - kProbClamp;
    const real_t p = std::clamp(vy.data[0], lo, hi);
    Matrix out(1, 1);
    out.data[0] = -(label * std::log(p) + (real_t(1) - label) * std::log(real_t(1) - p));
    return {this, push(std::move(out), [iy, label, lo, hi](Tape& t, const Matrix& g) {
                const real_t v = t.val(iy).data[0];
                if (v <= lo || v >= hi) return;  // clamped region has zero slope
                t.grad_acc(iy).data[0] += g.data[0] * (v - label) / (v * (real_t(1) - v));
            })};
}

const Matrix& Tape::val(Var v) const { return *nodes_[check(v)].v; }

void Tape::backward(Var loss, GradBuffer* sink) {
    const int il = check(loss);
    const Matrix& lv = val(il);
    if (lv.rows != 1 || lv.cols != 1)
        throw GraphError("backward: loss must be a 1x1 scalar, got " + lv.shape_str());
    for (Node& n : nodes_) n.grad = Matrix();
    sink_ = sink;
    grad_acc(il).data[0] = real_t(1);
    for (int i = il; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.grad.empty() || !n.back) continue;
        n.back(*this, n.grad);
    }
    sink_ = nullptr;
}

void Tape::reset() {
    nodes_.clear();
    param_nodes_.clear();
}

}  // namespace hemix
