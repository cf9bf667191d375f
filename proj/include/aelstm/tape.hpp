#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <string>
#include <utility>
#include <vector>

#include "aelstm/matrix.hpp"

namespace aelstm {

// A named parameter with its gradient accumulator. `slot` is assigned by
// assign_slots() and indexes optimizer / reduction buffers.
struct ParamGroup {
    std::string name;
    Matrix value;
    Matrix grad;
    int slot = -1;

    ParamGroup() = default;
    ParamGroup(std::string n, std::size_t rows, std::size_t cols)
        : name(std::move(n)), value(rows, cols), grad(rows, cols) {}

    void zero_grad() { grad.fill(0.0); }
};

void assign_slots(std::vector<ParamGroup*>& groups);
void zero_grads(std::vector<ParamGroup*>& groups);

// Widths of the contiguous blocks a 1xN vector is split into for the
// block-scaling gate (at most 4 blocks).
struct BlockWidths {
    std::array<std::size_t, 4> width{};
    std::size_t count = 0;
    std::size_t total() const;
};

// Reverse-mode tape over whole-matrix operations (affine, activations,
// elementwise arithmetic, concat/slice, block scaling, squared-error
// reductions). Nodes are recorded in creation order and replayed in reverse
// on backward(). Node storage is recycled across reset() calls so that
// re-recording an identically shaped graph allocates nothing.
class Tape {
public:
    // --- leaves ---
    int input(const Matrix& v);
    int zeros(std::size_t rows, std::size_t cols);
    int param(ParamGroup& pg);  // one node per group per recording

    // --- ops ---
    int affine(int x, int w, int b);  // x:(B x n) * w:(n x m) + b:(1 x m)
    int sigmoid(int x);
    int tanh_op(int x);
    int softmax_row(int x);  // row-wise, max-subtracted
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);  // elementwise
    int scale(int a, double s);
    int concat(int a, int b);  // along columns
    int slice(int a, std::size_t offset, std::size_t width);  // columns
    // Multiplies block k of x (1 x N) by gate(0, k); gate is 1 x bw.count.
    int block_scale(int x, int gate, const BlockWidths& bw);
    // sum over all entries of w[col] * (pred - target)^2; returns a 1x1 node.
    int weighted_sse(int pred, const Matrix& target, const Matrix& col_weights);
    int sse(int pred, const Matrix& target);  // unweighted variant
    int sum_sq_diff(int a, int b);            // ||a - b||^2 as a 1x1 node

    const Matrix& value(int id) const;
    double scalar(int id) const;  // value of a 1x1 node

    // Propagates d(root)/d(node) through the graph, seeding the 1x1 root
    // with `seed`. Gradients of Param leaves are accumulated (+=) either
    // into each ParamGroup::grad or, when `sink` is given, into
    // sink[pg.slot] (all slots must be assigned and sink sized/shaped).
    void backward(int root, double seed = 1.0);
    void backward_into(int root, std::vector<Matrix>& sink, double seed = 1.0);

    void reset();
    std::size_t node_count() const { return live_; }

private:
    enum class Op : std::uint8_t {
        Input, Param, Affine, Sigmoid, Tanh, SoftmaxRow, Add, Sub, Mul, Scale,
        Concat, Slice, BlockScale, WeightedSse, SumSqDiff
    };

    struct Node {
        Op op = Op::Input;
        int a = -1, b = -1, c = -1;
        std::size_t offset = 0, width = 0;
        double factor = 0.0;
        BlockWidths blocks{};
        ParamGroup* pg = nullptr;
        bool needs_grad = false;
        bool aux_valid = false;  // param nodes: transposed value cached this pass
        Matrix val;
        Matrix grad;
        Matrix aux1, aux2;  // captured constants (targets, weights)
    };

    Node& fresh(Op op);
    const Matrix& nval(int id) const;
    const Matrix& nval(const Node& n) const { return n.op == Op::Param ? n.pg->value : n.val; }
    void check_id(int id, const char* where) const;
    void run_backward(int root, double seed);

    std::deque<Node> nodes_;  // stable references while the tape grows
    std::size_t live_ = 0;
    std::vector<std::pair<ParamGroup*, int>> param_nodes_;
    bool backward_done_ = false;
};

}  // namespace aelstm
