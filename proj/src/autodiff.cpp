#include "graphlm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "graphlm/errors.hpp"

namespace graphlm {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("autodiff: ") + what);
}

// C += A * B, plain ikj loop; inner loop is contiguous in B and C.
void matmul_acc(const Matrix& A, const Matrix& B, Matrix& C) {
    const int n = A.rows, k = A.cols, m = B.cols;
    for (int i = 0; i < n; ++i) {
        const double* arow = &A.a[static_cast<size_t>(i) * k];
        double* crow = &C.a[static_cast<size_t>(i) * m];
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = &B.a[static_cast<size_t>(p) * m];
            for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

// C += A * B^T
void matmul_nt_acc(const Matrix& A, const Matrix& B, Matrix& C) {
    const int n = A.rows, k = A.cols, m = B.rows;
    for (int i = 0; i < n; ++i) {
        const double* arow = &A.a[static_cast<size_t>(i) * k];
        double* crow = &C.a[static_cast<size_t>(i) * m];
        for (int j = 0; j < m; ++j) {
            const double* brow = &B.a[static_cast<size_t>(j) * k];
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] += acc;
        }
    }
}

// C += A^T * B
void matmul_tn_acc(const Matrix& A, const Matrix& B, Matrix& C) {
    const int n = A.cols, k = A.rows, m = B.cols;
    for (int p = 0; p < k; ++p) {
        const double* arow = &A.a[static_cast<size_t>(p) * n];
        const double* brow = &B.a[static_cast<size_t>(p) * m];
        for (int i = 0; i < n; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* crow = &C.a[static_cast<size_t>(i) * m];
            for (int j = 0; j < m; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace

Var Tape::push(Node&& n) {
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size() - 1)};
}

Matrix& Tape::grad_of(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.grad_alloc) {
        n.grad = Matrix(n.val.rows, n.val.cols);
        n.grad_alloc = true;
    }
    return n.grad;
}

const Matrix& Tape::grad(Var v) const {
    const Node& n = nodes_[static_cast<size_t>(v.id)];
    require(n.grad_alloc, "grad requested for a node the backward sweep never reached");
    return n.grad;
}

Var Tape::leaf(const Matrix& value, bool requires_grad) {
    Node n;
    n.op = Op::kLeaf;
    n.val = value;
    n.needs_grad = requires_grad;
    return push(std::move(n));
}

Var Tape::leaf(Matrix&& value, bool requires_grad) {
    Node n;
    n.op = Op::kLeaf;
    n.val = std::move(value);
    n.needs_grad = requires_grad;
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    require(A.cols == B.rows, "matmul: inner dimensions differ");
    Node n;
    n.op = Op::kMatMul;
    n.a = a.id;
    n.b = b.id;
    n.val = Matrix(A.rows, B.cols);
    matmul_acc(A, B, n.val);
    n.needs_grad = requires_grad(a) || requires_grad(b);
    return push(std::move(n));
}

Var Tape::matmul_nt(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    require(A.cols == B.cols, "matmul_nt: inner dimensions differ");
    Node n;
    n.op = Op::kMatMulNT;
    n.a = a.id;
    n.b = b.id;
    n.val = Matrix(A.rows, B.rows);
    matmul_nt_acc(A, B, n.val);
    n.needs_grad = requires_grad(a) || requires_grad(b);
    return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    require(A.same_shape(B), "add: shape mismatch");
    Node n;
    n.op = Op::kAdd;
    n.a = a.id;
    n.b = b.id;
    n.val = A;
    for (size_t i = 0; i < n.val.size(); ++i) n.val.a[i] += B.a[i];
    n.needs_grad = requires_grad(a) || requires_grad(b);
    return push(std::move(n));
}

Var Tape::sub(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    require(A.same_shape(B), "sub: shape mismatch");
    Node n;
    n.op = Op::kSub;
    n.a = a.id;
    n.b = b.id;
    n.val = A;
    for (size_t i = 0; i < n.val.size(); ++i) n.val.a[i] -= B.a[i];
    n.needs_grad = requires_grad(a) || requires_grad(b);
    return push(std::move(n));
}

Var Tape::add_rowvec(Var a, Var v) {
    const Matrix& A = value(a);
    const Matrix& V = value(v);
    require(V.rows == 1 && V.cols == A.cols, "add_rowvec: v must be 1 x cols(a)");
    Node n;
    n.op = Op::kAddRowVec;
    n.a = a.id;
    n.b = v.id;
    n.val = A;
    for (int r = 0; r < A.rows; ++r)
        for (int c = 0; c < A.cols; ++c) n.val(r, c) += V(0, c);
    n.needs_grad = requires_grad(a) || requires_grad(v);
    return push(std::move(n));
}

Var Tape::mul_rowvec(Var a, Var v) {
    const Matrix& A = value(a);
    const Matrix& V = value(v);
    require(V.rows == 1 && V.cols == A.cols, "mul_rowvec: v must be 1 x cols(a)");
    Node n;
    n.op = Op::kMulRowVec;
    n.a = a.id;
    n.b = v.id;
    n.val = A;
    for (int r = 0; r < A.rows; ++r)
        for (int c = 0; c < A.cols; ++c) n.val(r, c) *= V(0, c);
    n.needs_grad = requires_grad(a) || requires_grad(v);
    return push(std::move(n));
}

Var Tape::hadamard(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    require(A.same_shape(B), "hadamard: shape mismatch");
    Node n;
    n.op = Op::kHadamard;
    n.a = a.id;
    n.b = b.id;
    n.val = A;
    for (size_t i = 0; i < n.val.size(); ++i) n.val.a[i] *= B.a[i];
    n.needs_grad = requires_grad(a) || requires_grad(b);
    return push(std::move(n));
}

Var Tape::scale(Var a, double c) {
    Node n;
    n.op = Op::kScale;
    n.a = a.id;
    n.c0 = c;
    n.val = value(a);
    for (double& x : n.val.a) x *= c;
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Var Tape::relu(Var a) {
    Node n;
    n.op = Op::kRelu;
    n.a = a.id;
    n.val = value(a);
    for (double& x : n.val.a) x = x > 0.0 ? x : 0.0;
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Var Tape::concat_cols(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    require(A.rows == B.rows, "concat_cols: row counts differ");
    Node n;
    n.op = Op::kConcatCols;
    n.a = a.id;
    n.b = b.id;
    n.val = Matrix(A.rows, A.cols + B.cols);
    for (int r = 0; r < A.rows; ++r) {
        for (int c = 0; c < A.cols; ++c) n.val(r, c) = A(r, c);
        for (int c = 0; c < B.cols; ++c) n.val(r, A.cols + c) = B(r, c);
    }
    n.needs_grad = requires_grad(a) || requires_grad(b);
    return push(std::move(n));
}

Var Tape::concat_rows(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    require(A.cols == B.cols, "concat_rows: column counts differ");
    Node n;
    n.op = Op::kConcatRows;
    n.a = a.id;
    n.b = b.id;
    n.val = Matrix(A.rows + B.rows, A.cols);
    for (int r = 0; r < A.rows; ++r)
        for (int c = 0; c < A.cols; ++c) n.val(r, c) = A(r, c);
    for (int r = 0; r < B.rows; ++r)
        for (int c = 0; c < B.cols; ++c) n.val(A.rows + r, c) = B(r, c);
    n.needs_grad = requires_grad(a) || requires_grad(b);
    return push(std::move(n));
}

Var Tape::slice_cols(Var a, int c0, int c1) {
    const Matrix& A = value(a);
    require(0 <= c0 && c0 < c1 && c1 <= A.cols, "slice_cols: bad range");
    Node n;
    n.op = Op::kSliceCols;
    n.a = a.id;
    n.i0 = c0;
    n.i1 = c1;
    n.val = Matrix(A.rows, c1 - c0);
    for (int r = 0; r < A.rows; ++r)
        for (int c = c0; c < c1; ++c) n.val(r, c - c0) = A(r, c);
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Var Tape::gather_rows(Var a, std::vector<int> idx) {
    const Matrix& A = value(a);
    for (int i : idx) require(0 <= i && i < A.rows, "gather_rows: index out of range");
    Node n;
    n.op = Op::kGatherRows;
    n.a = a.id;
    n.val = Matrix(static_cast<int>(idx.size()), A.cols);
    for (size_t r = 0; r < idx.size(); ++r)
        for (int c = 0; c < A.cols; ++c) n.val(static_cast<int>(r), c) = A(idx[r], c);
    n.idx = std::move(idx);
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Var Tape::splice_rows(Var base, Var rows, std::vector<int> positions) {
    const Matrix& B = value(base);
    const Matrix& R = value(rows);
    require(R.cols == B.cols, "splice_rows: column counts differ");
    require(static_cast<int>(positions.size()) == R.rows, "splice_rows: positions/rows mismatch");
    std::vector<char> seen(static_cast<size_t>(B.rows), 0);
    for (int p : positions) {
        require(0 <= p && p < B.rows, "splice_rows: position out of range");
        require(!seen[static_cast<size_t>(p)], "splice_rows: duplicate position");
        seen[static_cast<size_t>(p)] = 1;
    }
    Node n;
    n.op = Op::kSpliceRows;
    n.a = base.id;
    n.b = rows.id;
    n.val = B;
    for (size_t i = 0; i < positions.size(); ++i)
        for (int c = 0; c < B.cols; ++c) n.val(positions[i], c) = R(static_cast<int>(i), c);
    n.idx = std::move(positions);
    n.needs_grad = requires_grad(base) || requires_grad(rows);
    return push(std::move(n));
}

Var Tape::row_l2_normalize(Var a) {
    const Matrix& A = value(a);
    Node n;
    n.op = Op::kRowL2Norm;
    n.a = a.id;
    n.val = A;
    for (int r = 0; r < A.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < A.cols; ++c) s += A(r, c) * A(r, c);
        if (s > 0.0) {
            double inv = 1.0 / std::sqrt(s);
            for (int c = 0; c < A.cols; ++c) n.val(r, c) *= inv;
        }
    }
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Var Tape::rows_dot(Var a, Var b) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    require(A.same_shape(B), "rows_dot: shape mismatch");
    Node n;
    n.op = Op::kRowsDot;
    n.a = a.id;
    n.b = b.id;
    n.val = Matrix(A.rows, 1);
    for (int r = 0; r < A.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < A.cols; ++c) s += A(r, c) * B(r, c);
        n.val(r, 0) = s;
    }
    n.needs_grad = requires_grad(a) || requires_grad(b);
    return push(std::move(n));
}

Var Tape::rows_sqnorm(Var a) {
    const Matrix& A = value(a);
    Node n;
    n.op = Op::kRowsSqNorm;
    n.a = a.id;
    n.val = Matrix(A.rows, 1);
    for (int r = 0; r < A.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < A.cols; ++c) s += A(r, c) * A(r, c);
        n.val(r, 0) = s;
    }
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Var Tape::exp_elem(Var a) {
    Node n;
    n.op = Op::kExp;
    n.a = a.id;
    n.val = value(a);
    for (double& x : n.val.a) x = std::exp(x);
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Var Tape::mean_all(Var a) {
    const Matrix& A = value(a);
    require(A.size() > 0, "mean_all: empty matrix");
    Node n;
    n.op = Op::kMeanAll;
    n.a = a.id;
    n.val = Matrix(1, 1);
    double s = 0.0;
    for (double x : A.a) s += x;
    n.val(0, 0) = s / static_cast<double>(A.size());
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Var Tape::mean_rows(Var a) {
    const Matrix& A = value(a);
    require(A.rows > 0, "mean_rows: empty matrix");
    Node n;
    n.op = Op::kMeanRows;
    n.a = a.id;
    n.val = Matrix(1, A.cols);
    for (int c = 0; c < A.cols; ++c) {
        double s = 0.0;
        for (int r = 0; r < A.rows; ++r) s += A(r, c);
        n.val(0, c) = s / A.rows;
    }
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Var Tape::layer_norm(Var a, Var gamma, Var beta, double eps) {
    const Matrix& A = value(a);
    const Matrix& G = value(gamma);
    const Matrix& B = value(beta);
    require(G.rows == 1 && G.cols == A.cols && B.rows == 1 && B.cols == A.cols,
            "layer_norm: gamma/beta must be 1 x cols(a)");
    Node n;
    n.op = Op::kLayerNorm;
    n.a = a.id;
    n.b = gamma.id;
    n.c = beta.id;
    n.c0 = eps;
    n.val = Matrix(A.rows, A.cols);
    for (int r = 0; r < A.rows; ++r) {
        double mu = 0.0;
        for (int c = 0; c < A.cols; ++c) mu += A(r, c);
        mu /= A.cols;
        double var = 0.0;
        for (int c = 0; c < A.cols; ++c) {
            double d = A(r, c) - mu;
            var += d * d;
        }
        var /= A.cols;
        double inv = 1.0 / std::sqrt(var + eps);
        for (int c = 0; c < A.cols; ++c)
            n.val(r, c) = (A(r, c) - mu) * inv * G(0, c) + B(0, c);
    }
    n.needs_grad = requires_grad(a) || requires_grad(gamma) || requires_grad(beta);
    return push(std::move(n));
}

Var Tape::causal_softmax(Var a) {
    const Matrix& A = value(a);
    Node n;
    n.op = Op::kCausalSoftmax;
    n.a = a.id;
    n.val = Matrix(A.rows, A.cols);
    for (int r = 0; r < A.rows; ++r) {
        int hi = std::min(r, A.cols - 1);
        double mx = A(r, 0);
        for (int c = 1; c <= hi; ++c) mx = std::max(mx, A(r, c));
        double z = 0.0;
        for (int c = 0; c <= hi; ++c) z += std::exp(A(r, c) - mx);
        for (int c = 0; c <= hi; ++c) n.val(r, c) = std::exp(A(r, c) - mx) / z;
    }
    n.needs_grad = requires_grad(a);
    return push(std::move(n));
}

Var Tape::cross_entropy_rows(Var logits, std::vector<int> targets) {
    const Matrix& L = value(logits);
    require(static_cast<int>(targets.size()) == L.rows, "cross_entropy_rows: targets size != rows");
    int active = 0;
    double total = 0.0;
    for (int r = 0; r < L.rows; ++r) {
        int t = targets[static_cast<size_t>(r)];
        if (t < 0) continue;
        require(t < L.cols, "cross_entropy_rows: target out of range");
        double mx = L(r, 0);
        for (int c = 1; c < L.cols; ++c) mx = std::max(mx, L(r, c));
        double z = 0.0;
        for (int c = 0; c < L.cols; ++c) z += std::exp(L(r, c) - mx);
        total += std::log(z) + mx - L(r, t);
        ++active;
    }
    require(active > 0, "cross_entropy_rows: no active rows");
    Node n;
    n.op = Op::kCrossEntropy;
    n.a = logits.id;
    n.idx = std::move(targets);
    n.i0 = active;
    n.val = Matrix(1, 1);
    n.val(0, 0) = total / active;
    n.needs_grad = requires_grad(logits);
    return push(std::move(n));
}

double Tape::min_kink_margin() const {
    double margin = 1e300;
    for (const Node& n : nodes_) {
        if (n.op == Op::kRelu) {
            const Matrix& A = nodes_[static_cast<size_t>(n.a)].val;
            for (double x : A.a) margin = std::min(margin, std::abs(x));
        } else if (n.op == Op::kRowL2Norm) {
            const Matrix& A = nodes_[static_cast<size_t>(n.a)].val;
            for (int r = 0; r < A.rows; ++r) {
                double s = 0.0;
                for (int c = 0; c < A.cols; ++c) s += A(r, c) * A(r, c);
                margin = std::min(margin, std::sqrt(s));
            }
        }
    }
    return margin;
}

void Tape::backward(Var loss) {
    const Node& ln = nodes_[static_cast<size_t>(loss.id)];
    require(ln.val.rows == 1 && ln.val.cols == 1, "backward: loss must be 1x1");
    grad_of(loss.id)(0, 0) = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        if (!n.needs_grad || !n.grad_alloc) continue;
        backward_node(id);
    }
}

void Tape::backward_node(int id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    const Matrix& g = n.grad;
    auto needs = [&](int in) { return in >= 0 && nodes_[static_cast<size_t>(in)].needs_grad; };

    switch (n.op) {
        case Op::kLeaf:
            break;
        case Op::kMatMul: {
            if (needs(n.a)) matmul_nt_acc(g, nodes_[static_cast<size_t>(n.b)].val, grad_of(n.a));
            if (needs(n.b)) matmul_tn_acc(nodes_[static_cast<size_t>(n.a)].val, g, grad_of(n.b));
            break;
        }
        case Op::kMatMulNT: {
            if (needs(n.a)) matmul_acc(g, nodes_[static_cast<size_t>(n.b)].val, grad_of(n.a));
            if (needs(n.b)) matmul_tn_acc(g, nodes_[static_cast<size_t>(n.a)].val, grad_of(n.b));
            break;
        }
        case Op::kAdd: {
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) da.a[i] += g.a[i];
            }
            if (needs(n.b)) {
                Matrix& db = grad_of(n.b);
                for (size_t i = 0; i < g.size(); ++i) db.a[i] += g.a[i];
            }
            break;
        }
        case Op::kSub: {
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) da.a[i] += g.a[i];
            }
            if (needs(n.b)) {
                Matrix& db = grad_of(n.b);
                for (size_t i = 0; i < g.size(); ++i) db.a[i] -= g.a[i];
            }
            break;
        }
        case Op::kAddRowVec: {
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) da.a[i] += g.a[i];
            }
            if (needs(n.b)) {
                Matrix& dv = grad_of(n.b);
                for (int r = 0; r < g.rows; ++r)
                    for (int c = 0; c < g.cols; ++c) dv(0, c) += g(r, c);
            }
            break;
        }
        case Op::kMulRowVec: {
            const Matrix& A = nodes_[static_cast<size_t>(n.a)].val;
            const Matrix& V = nodes_[static_cast<size_t>(n.b)].val;
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                for (int r = 0; r < g.rows; ++r)
                    for (int c = 0; c < g.cols; ++c) da(r, c) += g(r, c) * V(0, c);
            }
            if (needs(n.b)) {
                Matrix& dv = grad_of(n.b);
                for (int r = 0; r < g.rows; ++r)
                    for (int c = 0; c < g.cols; ++c) dv(0, c) += g(r, c) * A(r, c);
            }
            break;
        }
        case Op::kHadamard: {
            const Matrix& A = nodes_[static_cast<size_t>(n.a)].val;
            const Matrix& B = nodes_[static_cast<size_t>(n.b)].val;
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) da.a[i] += g.a[i] * B.a[i];
            }
            if (needs(n.b)) {
                Matrix& db = grad_of(n.b);
                for (size_t i = 0; i < g.size(); ++i) db.a[i] += g.a[i] * A.a[i];
            }
            break;
        }
        case Op::kScale: {
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) da.a[i] += g.a[i] * n.c0;
            }
            break;
        }
        case Op::kRelu: {
            if (needs(n.a)) {
                const Matrix& A = nodes_[static_cast<size_t>(n.a)].val;
                Matrix& da = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i)
                    if (A.a[i] > 0.0) da.a[i] += g.a[i];
            }
            break;
        }
        case Op::kConcatCols: {
            const Matrix& A = nodes_[static_cast<size_t>(n.a)].val;
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                for (int r = 0; r < g.rows; ++r)
                    for (int c = 0; c < A.cols; ++c) da(r, c) += g(r, c);
            }
            if (needs(n.b)) {
                Matrix& db = grad_of(n.b);
                for (int r = 0; r < g.rows; ++r)
                    for (int c = 0; c < db.cols; ++c) db(r, c) += g(r, A.cols + c);
            }
            break;
        }
        case Op::kConcatRows: {
            const Matrix& A = nodes_[static_cast<size_t>(n.a)].val;
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                for (int r = 0; r < A.rows; ++r)
                    for (int c = 0; c < g.cols; ++c) da(r, c) += g(r, c);
            }
            if (needs(n.b)) {
                Matrix& db = grad_of(n.b);
                for (int r = 0; r < db.rows; ++r)
                    for (int c = 0; c < g.cols; ++c) db(r, c) += g(A.rows + r, c);
            }
            break;
        }
        case Op::kSliceCols: {
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                for (int r = 0; r < g.rows; ++r)
                    for (int c = 0; c < g.cols; ++c) da(r, n.i0 + c) += g(r, c);
            }
            break;
        }
        case Op::kGatherRows: {
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                for (size_t i = 0; i < n.idx.size(); ++i)
                    for (int c = 0; c < g.cols; ++c)
                        da(n.idx[i], c) += g(static_cast<int>(i), c);
            }
            break;
        }
        case Op::kSpliceRows: {
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                std::vector<char> replaced(static_cast<size_t>(g.rows), 0);
                for (int p : n.idx) replaced[static_cast<size_t>(p)] = 1;
                for (int r = 0; r < g.rows; ++r) {
                    if (replaced[static_cast<size_t>(r)]) continue;
                    for (int c = 0; c < g.cols; ++c) da(r, c) += g(r, c);
                }
            }
            if (needs(n.b)) {
                Matrix& db = grad_of(n.b);
                for (size_t i = 0; i < n.idx.size(); ++i)
                    for (int c = 0; c < g.cols; ++c)
                        db(static_cast<int>(i), c) += g(n.idx[i], c);
            }
            break;
        }
        case Op::kRowL2Norm: {
            if (needs(n.a)) {
                const Matrix& A = nodes_[static_cast<size_t>(n.a)].val;
                const Matrix& Y = n.val;
                Matrix& da = grad_of(n.a);
                for (int r = 0; r < A.rows; ++r) {
                    double s = 0.0;
                    for (int c = 0; c < A.cols; ++c) s += A(r, c) * A(r, c);
                    if (s <= 0.0) continue;
                    double inv = 1.0 / std::sqrt(s);
                    double gy = 0.0;
                    for (int c = 0; c < A.cols; ++c) gy += g(r, c) * Y(r, c);
                    for (int c = 0; c < A.cols; ++c)
                        da(r, c) += (g(r, c) - gy * Y(r, c)) * inv;
                }
            }
            break;
        }
        case Op::kRowsDot: {
            const Matrix& A = nodes_[static_cast<size_t>(n.a)].val;
            const Matrix& B = nodes_[static_cast<size_t>(n.b)].val;
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                for (int r = 0; r < A.rows; ++r)
                    for (int c = 0; c < A.cols; ++c) da(r, c) += g(r, 0) * B(r, c);
            }
            if (needs(n.b)) {
                Matrix& db = grad_of(n.b);
                for (int r = 0; r < A.rows; ++r)
                    for (int c = 0; c < A.cols; ++c) db(r, c) += g(r, 0) * A(r, c);
            }
            break;
        }
        case Op::kRowsSqNorm: {
            if (needs(n.a)) {
                const Matrix& A = nodes_[static_cast<size_t>(n.a)].val;
                Matrix& da = grad_of(n.a);
                for (int r = 0; r < A.rows; ++r)
                    for (int c = 0; c < A.cols; ++c) da(r, c) += 2.0 * A(r, c) * g(r, 0);
            }
            break;
        }
        case Op::kExp: {
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) da.a[i] += g.a[i] * n.val.a[i];
            }
            break;
        }
        case Op::kMeanAll: {
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                double w = g(0, 0) / static_cast<double>(da.size());
                for (double& x : da.a) x += w;
            }
            break;
        }
        case Op::kMeanRows: {
            if (needs(n.a)) {
                Matrix& da = grad_of(n.a);
                for (int r = 0; r < da.rows; ++r)
                    for (int c = 0; c < da.cols; ++c) da(r, c) += g(0, c) / da.rows;
            }
            break;
        }
        case Op::kLayerNorm: {
            const Matrix& A = nodes_[static_cast<size_t>(n.a)].val;
            const Matrix& G = nodes_[static_cast<size_t>(n.b)].val;
            const int d = A.cols;
            for (int r = 0; r < A.rows; ++r) {
                double mu = 0.0;
                for (int c = 0; c < d; ++c) mu += A(r, c);
                mu /= d;
                double var = 0.0;
                for (int c = 0; c < d; ++c) {
                    double dd = A(r, c) - mu;
                    var += dd * dd;
                }
                var /= d;
                double inv = 1.0 / std::sqrt(var + n.c0);
                if (needs(n.b) || needs(n.c)) {
                    Matrix* dg = needs(n.b) ? &grad_of(n.b) : nullptr;
                    Matrix* db = needs(n.c) ? &grad_of(n.c) : nullptr;
                    for (int c = 0; c < d; ++c) {
                        double xhat = (A(r, c) - mu) * inv;
                        if (dg) (*dg)(0, c) += g(r, c) * xhat;
                        if (db) (*db)(0, c) += g(r, c);
                    }
                }
                if (needs(n.a)) {
                    Matrix& da = grad_of(n.a);
                    double sum_dx = 0.0, sum_dx_xhat = 0.0;
                    for (int c = 0; c < d; ++c) {
                        double dxhat = g(r, c) * G(0, c);
                        double xhat = (A(r, c) - mu) * inv;
                        sum_dx += dxhat;
                        sum_dx_xhat += dxhat * xhat;
                    }
                    for (int c = 0; c < d; ++c) {
                        double dxhat = g(r, c) * G(0, c);
                        double xhat = (A(r, c) - mu) * inv;
                        da(r, c) += inv * (dxhat - sum_dx / d - xhat * sum_dx_xhat / d);
                    }
                }
            }
            break;
        }
        case Op::kCausalSoftmax: {
            if (needs(n.a)) {
                const Matrix& Y = n.val;
                Matrix& da = grad_of(n.a);
                for (int r = 0; r < Y.rows; ++r) {
                    int hi = std::min(r, Y.cols - 1);
                    double dot = 0.0;
                    for (int c = 0; c <= hi; ++c) dot += g(r, c) * Y(r, c);
                    for (int c = 0; c <= hi; ++c)
                        da(r, c) += Y(r, c) * (g(r, c) - dot);
                }
            }
            break;
        }
        case Op::kCrossEntropy: {
            if (needs(n.a)) {
                const Matrix& L = nodes_[static_cast<size_t>(n.a)].val;
                Matrix& da = grad_of(n.a);
                double w = g(0, 0) / n.i0;
                for (int r = 0; r < L.rows; ++r) {
                    int t = n.idx[static_cast<size_t>(r)];
                    if (t < 0) continue;
                    double mx = L(r, 0);
                    for (int c = 1; c < L.cols; ++c) mx = std::max(mx, L(r, c));
                    double z = 0.0;
                    for (int c = 0; c < L.cols; ++c) z += std::exp(L(r, c) - mx);
                    for (int c = 0; c < L.cols; ++c) {
                        double p = std::exp(L(r, c) - mx) / z;
                        da(r, c) += w * (p - (c == t ? 1.0 : 0.0));
                    }
                }
            }
            break;
        }
    }
}

}  // namespace graphlm
