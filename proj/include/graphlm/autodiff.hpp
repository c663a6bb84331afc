#pragma once
#include <cstdint>
#include <vector>

#include "graphlm/matrix.hpp"

namespace graphlm {

class Tape;

// Handle to a tape node. Valid only for the tape that produced it.
struct Var {
    int id = -1;
};

// Reverse-mode autodiff over dense matrices. A tape is built per forward
// pass; nodes are created in topological order, so backward() is a single
// reverse sweep. Gradients are accumulated only along paths that reach a
// grad-requiring leaf.
class Tape {
public:
    Var leaf(const Matrix& value, bool requires_grad = false);
    Var leaf(Matrix&& value, bool requires_grad = false);

    // y = a * b                    [n x k] [k x m] -> [n x m]
    Var matmul(Var a, Var b);
    // y = a * b^T                  [n x k] [m x k] -> [n x m]
    Var matmul_nt(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    // y = a + ones * v             v is [1 x d]
    Var add_rowvec(Var a, Var v);
    // y = a .* (ones * v)          v is [1 x d]
    Var mul_rowvec(Var a, Var v);
    Var hadamard(Var a, Var b);
    Var scale(Var a, double c);
    Var relu(Var a);
    Var concat_cols(Var a, Var b);
    Var concat_rows(Var a, Var b);
    // columns [c0, c1)
    Var slice_cols(Var a, int c0, int c1);
    // y rows = a rows at idx (duplicates allowed); grad scatter-adds
    Var gather_rows(Var a, std::vector<int> idx);
    // y = base with row positions[i] replaced by rows of `rows`
    Var splice_rows(Var base, Var rows, std::vector<int> positions);
    // per-row x / ||x||; zero rows map to zero rows (zero subgradient)
    Var row_l2_normalize(Var a);
    // per-row dot product                  [n x d],[n x d] -> [n x 1]
    Var rows_dot(Var a, Var b);
    // per-row squared L2 norm              [n x d] -> [n x 1]
    Var rows_sqnorm(Var a);
    Var exp_elem(Var a);
    Var mean_all(Var a);    // -> [1 x 1]
    Var mean_rows(Var a);   // column means -> [1 x d]
    // per-row layer norm with affine: gamma, beta are [1 x d]
    Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-5);
    // per row r: softmax over columns [0, r]; columns > r are zero
    Var causal_softmax(Var a);
    // mean cross-entropy over rows with target >= 0; logits [T x V],
    // targets.size() == T. Returns [1 x 1].
    Var cross_entropy_rows(Var logits, std::vector<int> targets);

    const Matrix& value(Var v) const { return nodes_[static_cast<size_t>(v.id)].val; }
    const Matrix& grad(Var v) const;
    bool requires_grad(Var v) const { return nodes_[static_cast<size_t>(v.id)].needs_grad; }

    // Seeds d(loss)/d(loss) = 1 and runs the reverse sweep. loss must be 1x1.
    void backward(Var loss);

    size_t num_nodes() const { return nodes_.size(); }

    // Smallest distance of any recorded nondifferentiable point from its
    // kink: |x| over ReLU inputs and row norms over L2-normalize inputs.
    // Finite-difference probes use this to reject ill-placed instances.
    double min_kink_margin() const;

private:
    enum class Op : uint8_t {
        kLeaf, kMatMul, kMatMulNT, kAdd, kSub, kAddRowVec, kMulRowVec,
        kHadamard, kScale, kRelu, kConcatCols, kConcatRows, kSliceCols,
        kGatherRows, kSpliceRows, kRowL2Norm, kRowsDot, kRowsSqNorm, kExp,
        kMeanAll, kMeanRows, kLayerNorm, kCausalSoftmax, kCrossEntropy,
    };
    struct Node {
        Op op = Op::kLeaf;
        int a = -1, b = -1, c = -1;
        Matrix val;
        Matrix grad;
        bool needs_grad = false;
        bool grad_alloc = false;
        std::vector<int> idx;
        double c0 = 0.0;
        int i0 = 0, i1 = 0;
    };

    std::vector<Node> nodes_;

    Var push(Node&& n);
    Matrix& grad_of(int id);
    void backward_node(int id);
};

}  // namespace graphlm
