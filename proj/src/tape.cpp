#include "aelstm/tape.hpp"

#include <cmath>

#include "aelstm/errors.hpp"

namespace aelstm {

void assign_slots(std::vector<ParamGroup*>& groups) {
    for (std::size_t i = 0; i < groups.size(); ++i) groups[i]->slot = static_cast<int>(i);
}

void zero_grads(std::vector<ParamGroup*>& groups) {
    for (ParamGroup* g : groups) g->zero_grad();
}

std::size_t BlockWidths::total() const {
    std::size_t t = 0;
    for (std::size_t i = 0; i < count; ++i) t += width[i];
    return t;
}

namespace {

inline double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Tape::Node& Tape::fresh(Op op) {
    if (live_ == nodes_.size()) nodes_.emplace_back();
    Node& n = nodes_[live_++];
    n.op = op;
    n.a = n.b = n.c = -1;
    n.offset = n.width = 0;
    n.factor = 0.0;
    n.pg = nullptr;
    n.needs_grad = false;
    n.aux_valid = false;
    return n;
}

void Tape::check_id(int id, const char* where) const {
    if (id < 0 || static_cast<std::size_t>(id) >= live_)
        throw StateError(std::string(where) + ": node id " + std::to_string(id) +
                         " is not on the tape (forward not recorded?)");
}

const Matrix& Tape::nval(int id) const {
    check_id(id, "value");
    return nval(nodes_[id]);
}

const Matrix& Tape::value(int id) const { return nval(id); }

double Tape::scalar(int id) const {
    const Matrix& v = nval(id);
    if (v.rows() != 1 || v.cols() != 1)
        throw DimensionError("scalar: node is " + v.shape_str() + ", expected 1x1");
    return v(0, 0);
}

void Tape::reset() {
    live_ = 0;
    param_nodes_.clear();
    backward_done_ = false;
}

int Tape::input(const Matrix& v) {
    Node& n = fresh(Op::Input);
    n.val = v;
    return static_cast<int>(live_) - 1;
}

int Tape::zeros(std::size_t rows, std::size_t cols) {
    Node& n = fresh(Op::Input);
    if (n.val.rows() != rows || n.val.cols() != cols) n.val.resize(rows, cols);
    else n.val.fill(0.0);
    return static_cast<int>(live_) - 1;
}

int Tape::param(ParamGroup& pg) {
    for (const auto& [group, id] : param_nodes_)
        if (group == &pg) return id;
    Node& n = fresh(Op::Param);
    n.pg = &pg;
    n.needs_grad = true;
    const int id = static_cast<int>(live_) - 1;
    param_nodes_.emplace_back(&pg, id);
    return id;
}

int Tape::affine(int x, int w, int b) {
    check_id(x, "affine");
    check_id(w, "affine");
    check_id(b, "affine");
    const Matrix& xv = nval(x);
    const Matrix& wv = nval(w);
    const Matrix& bv = nval(b);
    if (xv.cols() != wv.rows())
        throw DimensionError("affine: x is " + xv.shape_str() + " but W is " + wv.shape_str());
    if (bv.rows() != 1 || bv.cols() != wv.cols())
        throw DimensionError("affine: b is " + bv.shape_str() + " but W is " + wv.shape_str());
    Node& n = fresh(Op::Affine);
    n.a = x; n.b = w; n.c = b;
    n.needs_grad = nodes_[x].needs_grad || nodes_[w].needs_grad || nodes_[b].needs_grad;
    matmul_into(n.val, xv, wv);
    for (std::size_t r = 0; r < n.val.rows(); ++r) {
        double* row = n.val.row_ptr(r);
        const double* brow = bv.row_ptr(0);
        for (std::size_t j = 0; j < n.val.cols(); ++j) row[j] += brow[j];
    }
    return static_cast<int>(live_) - 1;
}

int Tape::sigmoid(int x) {
    check_id(x, "sigmoid");
    const Matrix& xv = nval(x);
    Node& n = fresh(Op::Sigmoid);
    n.a = x;
    n.needs_grad = nodes_[x].needs_grad;
    if (!n.val.same_shape(xv)) n.val.resize(xv.rows(), xv.cols());
    for (std::size_t i = 0; i < xv.size(); ++i) n.val.at_flat(i) = stable_sigmoid(xv.at_flat(i));
    return static_cast<int>(live_) - 1;
}

int Tape::tanh_op(int x) {
    check_id(x, "tanh");
    const Matrix& xv = nval(x);
    Node& n = fresh(Op::Tanh);
    n.a = x;
    n.needs_grad = nodes_[x].needs_grad;
    if (!n.val.same_shape(xv)) n.val.resize(xv.rows(), xv.cols());
    for (std::size_t i = 0; i < xv.size(); ++i) n.val.at_flat(i) = std::tanh(xv.at_flat(i));
    return static_cast<int>(live_) - 1;
}

int Tape::softmax_row(int x) {
    check_id(x, "softmax_row");
    const Matrix& xv = nval(x);
    Node& n = fresh(Op::SoftmaxRow);
    n.a = x;
    n.needs_grad = nodes_[x].needs_grad;
    if (!n.val.same_shape(xv)) n.val.resize(xv.rows(), xv.cols());
    for (std::size_t r = 0; r < xv.rows(); ++r) {
        const double* in = xv.row_ptr(r);
        double* out = n.val.row_ptr(r);
        double mx = in[0];
        for (std::size_t j = 1; j < xv.cols(); ++j) mx = std::max(mx, in[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < xv.cols(); ++j) {
            out[j] = std::exp(in[j] - mx);
            denom += out[j];
        }
        const double inv = 1.0 / denom;
        for (std::size_t j = 0; j < xv.cols(); ++j) out[j] *= inv;
    }
    return static_cast<int>(live_) - 1;
}

int Tape::add(int a, int b) {
    check_id(a, "add");
    check_id(b, "add");
    const Matrix& av = nval(a);
    const Matrix& bv = nval(b);
    require_same_shape(av, bv, "add");
    Node& n = fresh(Op::Add);
    n.a = a; n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    if (!n.val.same_shape(av)) n.val.resize(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.size(); ++i) n.val.at_flat(i) = av.at_flat(i) + bv.at_flat(i);
    return static_cast<int>(live_) - 1;
}

int Tape::sub(int a, int b) {
    check_id(a, "sub");
    check_id(b, "sub");
    const Matrix& av = nval(a);
    const Matrix& bv = nval(b);
    require_same_shape(av, bv, "sub");
    Node& n = fresh(Op::Sub);
    n.a = a; n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    if (!n.val.same_shape(av)) n.val.resize(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.size(); ++i) n.val.at_flat(i) = av.at_flat(i) - bv.at_flat(i);
    return static_cast<int>(live_) - 1;
}

int Tape::mul(int a, int b) {
    check_id(a, "mul");
    check_id(b, "mul");
    const Matrix& av = nval(a);
    const Matrix& bv = nval(b);
    require_same_shape(av, bv, "mul");
    Node& n = fresh(Op::Mul);
    n.a = a; n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    if (!n.val.same_shape(av)) n.val.resize(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.size(); ++i) n.val.at_flat(i) = av.at_flat(i) * bv.at_flat(i);
    return static_cast<int>(live_) - 1;
}

int Tape::scale(int a, double s) {
    check_id(a, "scale");
    const Matrix& av = nval(a);
    Node& n = fresh(Op::Scale);
    n.a = a;
    n.factor = s;
    n.needs_grad = nodes_[a].needs_grad;
    if (!n.val.same_shape(av)) n.val.resize(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.size(); ++i) n.val.at_flat(i) = s * av.at_flat(i);
    return static_cast<int>(live_) - 1;
}

int Tape::concat(int a, int b) {
    check_id(a, "concat");
    check_id(b, "concat");
    const Matrix& av = nval(a);
    const Matrix& bv = nval(b);
    if (av.rows() != bv.rows())
        throw DimensionError("concat: " + av.shape_str() + " vs " + bv.shape_str());
    Node& n = fresh(Op::Concat);
    n.a = a; n.b = b;
    n.width = av.cols();
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    if (n.val.rows() != av.rows() || n.val.cols() != av.cols() + bv.cols())
        n.val.resize(av.rows(), av.cols() + bv.cols());
    for (std::size_t r = 0; r < av.rows(); ++r) {
        double* out = n.val.row_ptr(r);
        const double* pa = av.row_ptr(r);
        const double* pb = bv.row_ptr(r);
        for (std::size_t j = 0; j < av.cols(); ++j) out[j] = pa[j];
        for (std::size_t j = 0; j < bv.cols(); ++j) out[av.cols() + j] = pb[j];
    }
    return static_cast<int>(live_) - 1;
}

int Tape::slice(int a, std::size_t offset, std::size_t width) {
    check_id(a, "slice");
    const Matrix& av = nval(a);
    if (offset + width > av.cols())
        throw DimensionError("slice: [" + std::to_string(offset) + ", " +
                             std::to_string(offset + width) + ") out of " + av.shape_str());
    Node& n = fresh(Op::Slice);
    n.a = a;
    n.offset = offset;
    n.width = width;
    n.needs_grad = nodes_[a].needs_grad;
    if (n.val.rows() != av.rows() || n.val.cols() != width) n.val.resize(av.rows(), width);
    for (std::size_t r = 0; r < av.rows(); ++r) {
        const double* in = av.row_ptr(r) + offset;
        double* out = n.val.row_ptr(r);
        for (std::size_t j = 0; j < width; ++j) out[j] = in[j];
    }
    return static_cast<int>(live_) - 1;
}

int Tape::block_scale(int x, int gate, const BlockWidths& bw) {
    check_id(x, "block_scale");
    check_id(gate, "block_scale");
    const Matrix& xv = nval(x);
    const Matrix& gv = nval(gate);
    if (xv.rows() != 1)
        throw DimensionError("block_scale: x must be a single row, got " + xv.shape_str());
    if (gv.rows() != 1 || gv.cols() != bw.count)
        throw DimensionError("block_scale: gate is " + gv.shape_str() + ", expected 1x" +
                             std::to_string(bw.count));
    if (bw.total() != xv.cols())
        throw DimensionError("block_scale: blocks cover " + std::to_string(bw.total()) +
                             " columns but x has " + std::to_string(xv.cols()));
    Node& n = fresh(Op::BlockScale);
    n.a = x; n.b = gate;
    n.blocks = bw;
    n.needs_grad = nodes_[x].needs_grad || nodes_[gate].needs_grad;
    if (!n.val.same_shape(xv)) n.val.resize(1, xv.cols());
    std::size_t off = 0;
    for (std::size_t k = 0; k < bw.count; ++k) {
        const double g = gv(0, k);
        for (std::size_t j = 0; j < bw.width[k]; ++j) n.val(0, off + j) = g * xv(0, off + j);
        off += bw.width[k];
    }
    return static_cast<int>(live_) - 1;
}

int Tape::weighted_sse(int pred, const Matrix& target, const Matrix& col_weights) {
    check_id(pred, "weighted_sse");
    const Matrix& pv = nval(pred);
    require_same_shape(pv, target, "weighted_sse");
    if (!col_weights.empty() && (col_weights.rows() != 1 || col_weights.cols() != pv.cols()))
        throw DimensionError("weighted_sse: weights are " + col_weights.shape_str() +
                             ", expected 1x" + std::to_string(pv.cols()));
    Node& n = fresh(Op::WeightedSse);
    n.a = pred;
    n.needs_grad = nodes_[pred].needs_grad;
    n.aux1 = target;
    n.aux2 = col_weights;
    double acc = 0.0;
    for (std::size_t r = 0; r < pv.rows(); ++r) {
        const double* p = pv.row_ptr(r);
        const double* t = target.row_ptr(r);
        for (std::size_t j = 0; j < pv.cols(); ++j) {
            const double d = p[j] - t[j];
            const double w = col_weights.empty() ? 1.0 : col_weights(0, j);
            acc += w * d * d;
        }
    }
    if (n.val.rows() != 1 || n.val.cols() != 1) n.val.resize(1, 1);
    n.val(0, 0) = acc;
    return static_cast<int>(live_) - 1;
}

int Tape::sse(int pred, const Matrix& target) { return weighted_sse(pred, target, Matrix()); }

int Tape::sum_sq_diff(int a, int b) {
    check_id(a, "sum_sq_diff");
    check_id(b, "sum_sq_diff");
    const Matrix& av = nval(a);
    const Matrix& bv = nval(b);
    require_same_shape(av, bv, "sum_sq_diff");
    Node& n = fresh(Op::SumSqDiff);
    n.a = a; n.b = b;
    n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = av.at_flat(i) - bv.at_flat(i);
        acc += d * d;
    }
    if (n.val.rows() != 1 || n.val.cols() != 1) n.val.resize(1, 1);
    n.val(0, 0) = acc;
    return static_cast<int>(live_) - 1;
}

void Tape::run_backward(int root, double seed) {
    if (live_ == 0) throw StateError("backward: tape is empty, record a forward pass first");
    check_id(root, "backward");
    if (backward_done_) throw StateError("backward: called twice without a new forward pass");
    {
        const Matrix& rv = nval(root);
        if (rv.rows() != 1 || rv.cols() != 1)
            throw DimensionError("backward: root must be 1x1, got " + rv.shape_str());
    }
    backward_done_ = true;

    for (std::size_t i = 0; i <= static_cast<std::size_t>(root); ++i) {
        Node& n = nodes_[i];
        if (!n.needs_grad) continue;
        const Matrix& v = nval(n);
        if (!n.grad.same_shape(v)) n.grad.resize(v.rows(), v.cols());
        else n.grad.fill(0.0);
    }
    nodes_[root].grad(0, 0) = seed;

    for (int i = root; i >= 0; --i) {
        Node& n = nodes_[i];
        if (!n.needs_grad) continue;
        switch (n.op) {
            case Op::Input:
            case Op::Param:
                break;
            case Op::Affine: {
                Node& xn = nodes_[n.a];
                Node& wn = nodes_[n.b];
                Node& bn = nodes_[n.c];
                if (xn.needs_grad) {
                    // weights are reused across every timestep of a recording;
                    // a transposed copy keeps this kernel on contiguous rows
                    if (wn.op == Op::Param) {
                        if (!wn.aux_valid) {
                            wn.aux1 = transpose(nval(wn));
                            wn.aux_valid = true;
                        }
                        acc_matmul(xn.grad, n.grad, wn.aux1);
                    } else {
                        acc_matmul_a_bt(xn.grad, n.grad, nval(wn));
                    }
                }
                if (wn.needs_grad) acc_matmul_at_b(wn.grad, nval(xn), n.grad);
                if (bn.needs_grad) acc_col_sums(bn.grad, n.grad);
                break;
            }
            case Op::Sigmoid: {
                Node& xn = nodes_[n.a];
                if (!xn.needs_grad) break;
                for (std::size_t k = 0; k < n.val.size(); ++k) {
                    const double s = n.val.at_flat(k);
                    xn.grad.at_flat(k) += n.grad.at_flat(k) * s * (1.0 - s);
                }
                break;
            }
            case Op::Tanh: {
                Node& xn = nodes_[n.a];
                if (!xn.needs_grad) break;
                for (std::size_t k = 0; k < n.val.size(); ++k) {
                    const double t = n.val.at_flat(k);
                    xn.grad.at_flat(k) += n.grad.at_flat(k) * (1.0 - t * t);
                }
                break;
            }
            case Op::SoftmaxRow: {
                Node& xn = nodes_[n.a];
                if (!xn.needs_grad) break;
                for (std::size_t r = 0; r < n.val.rows(); ++r) {
                    const double* s = n.val.row_ptr(r);
                    const double* dy = n.grad.row_ptr(r);
                    double dot = 0.0;
                    for (std::size_t j = 0; j < n.val.cols(); ++j) dot += dy[j] * s[j];
                    double* dx = xn.grad.row_ptr(r);
                    for (std::size_t j = 0; j < n.val.cols(); ++j) dx[j] += s[j] * (dy[j] - dot);
                }
                break;
            }
            case Op::Add: {
                Node& an = nodes_[n.a];
                Node& bn = nodes_[n.b];
                if (an.needs_grad) acc_scaled(an.grad, n.grad, 1.0);
                if (bn.needs_grad) acc_scaled(bn.grad, n.grad, 1.0);
                break;
            }
            case Op::Sub: {
                Node& an = nodes_[n.a];
                Node& bn = nodes_[n.b];
                if (an.needs_grad) acc_scaled(an.grad, n.grad, 1.0);
                if (bn.needs_grad) acc_scaled(bn.grad, n.grad, -1.0);
                break;
            }
            case Op::Mul: {
                Node& an = nodes_[n.a];
                Node& bn = nodes_[n.b];
                if (an.needs_grad) {
                    const Matrix& bv = nval(bn);
                    for (std::size_t k = 0; k < n.grad.size(); ++k)
                        an.grad.at_flat(k) += n.grad.at_flat(k) * bv.at_flat(k);
                }
                if (bn.needs_grad) {
                    const Matrix& av = nval(an);
                    for (std::size_t k = 0; k < n.grad.size(); ++k)
                        bn.grad.at_flat(k) += n.grad.at_flat(k) * av.at_flat(k);
                }
                break;
            }
            case Op::Scale: {
                Node& an = nodes_[n.a];
                if (an.needs_grad) acc_scaled(an.grad, n.grad, n.factor);
                break;
            }
            case Op::Concat: {
                Node& an = nodes_[n.a];
                Node& bn = nodes_[n.b];
                const std::size_t wa = n.width;
                for (std::size_t r = 0; r < n.grad.rows(); ++r) {
                    const double* g = n.grad.row_ptr(r);
                    if (an.needs_grad) {
                        double* ga = an.grad.row_ptr(r);
                        for (std::size_t j = 0; j < wa; ++j) ga[j] += g[j];
                    }
                    if (bn.needs_grad) {
                        double* gb = bn.grad.row_ptr(r);
                        for (std::size_t j = 0; j < n.grad.cols() - wa; ++j) gb[j] += g[wa + j];
                    }
                }
                break;
            }
            case Op::Slice: {
                Node& an = nodes_[n.a];
                if (!an.needs_grad) break;
                for (std::size_t r = 0; r < n.grad.rows(); ++r) {
                    const double* g = n.grad.row_ptr(r);
                    double* ga = an.grad.row_ptr(r) + n.offset;
                    for (std::size_t j = 0; j < n.width; ++j) ga[j] += g[j];
                }
                break;
            }
            case Op::BlockScale: {
                Node& xn = nodes_[n.a];
                Node& gn = nodes_[n.b];
                const Matrix& xv = nval(xn);
                const Matrix& gv = nval(gn);
                std::size_t off = 0;
                for (std::size_t k = 0; k < n.blocks.count; ++k) {
                    const double g = gv(0, k);
                    double dg = 0.0;
                    for (std::size_t j = 0; j < n.blocks.width[k]; ++j) {
                        const double dy = n.grad(0, off + j);
                        if (xn.needs_grad) xn.grad(0, off + j) += dy * g;
                        dg += dy * xv(0, off + j);
                    }
                    if (gn.needs_grad) gn.grad(0, k) += dg;
                    off += n.blocks.width[k];
                }
                break;
            }
            case Op::WeightedSse: {
                Node& pn = nodes_[n.a];
                if (!pn.needs_grad) break;
                const double g = n.grad(0, 0);
                const Matrix& pv = nval(pn);
                for (std::size_t r = 0; r < pv.rows(); ++r) {
                    const double* p = pv.row_ptr(r);
                    const double* t = n.aux1.row_ptr(r);
                    double* dp = pn.grad.row_ptr(r);
                    for (std::size_t j = 0; j < pv.cols(); ++j) {
                        const double w = n.aux2.empty() ? 1.0 : n.aux2(0, j);
                        dp[j] += g * 2.0 * w * (p[j] - t[j]);
                    }
                }
                break;
            }
            case Op::SumSqDiff: {
                Node& an = nodes_[n.a];
                Node& bn = nodes_[n.b];
                const double g = n.grad(0, 0);
                const Matrix& av = nval(an);
                const Matrix& bv = nval(bn);
                for (std::size_t k = 0; k < av.size(); ++k) {
                    const double d = 2.0 * g * (av.at_flat(k) - bv.at_flat(k));
                    if (an.needs_grad) an.grad.at_flat(k) += d;
                    if (bn.needs_grad) bn.grad.at_flat(k) -= d;
                }
                break;
            }
        }
    }
}

void Tape::backward(int root, double seed) {
    run_backward(root, seed);
    for (const auto& [pg, id] : param_nodes_) {
        const Node& n = nodes_[id];
        if (static_cast<std::size_t>(id) > static_cast<std::size_t>(root)) continue;
        require_same_shape(pg->grad, n.grad, "backward param accumulate");
        acc_scaled(pg->grad, n.grad, 1.0);
    }
}

void Tape::backward_into(int root, std::vector<Matrix>& sink, double seed) {
    run_backward(root, seed);
    for (const auto& [pg, id] : param_nodes_) {
        if (static_cast<std::size_t>(id) > static_cast<std::size_t>(root)) continue;
        if (pg->slot < 0 || static_cast<std::size_t>(pg->slot) >= sink.size())
            throw StateError("backward_into: param '" + pg->name + "' has no assigned slot");
        Matrix& dst = sink[pg->slot];
        if (!dst.same_shape(pg->value)) dst.resize(pg->value.rows(), pg->value.cols());
        acc_scaled(dst, nodes_[id].grad, 1.0);
    }
}

}  // namespace aelstm
