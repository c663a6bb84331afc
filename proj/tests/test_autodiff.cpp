#include <cmath>

#include "doctest.h"
#include "graphlm/autodiff.hpp"
#include "graphlm/rng.hpp"
#include "test_helpers.hpp"

using namespace graphlm;
using graphlm::testing::finite_diff;
using graphlm::testing::max_rel_err;

namespace {

Matrix random_matrix(int r, int c, Rng& rng, double scale = 1.0) {
    Matrix m(r, c);
    for (auto& x : m.a) x = rng.normal() * scale;
    return m;
}

// Checks d(scalar_fn)/d(each input) against central differences.
void check_grads(std::vector<Matrix>& inputs,
                 const std::function<Var(Tape&, std::vector<Var>&)>& build, double tol = 1e-7) {
    auto eval = [&]() {
        Tape t;
        std::vector<Var> vars;
        for (auto& m : inputs) vars.push_back(t.leaf(m, false));
        return t.value(build(t, vars))(0, 0);
    };
    Tape t;
    std::vector<Var> vars;
    for (auto& m : inputs) vars.push_back(t.leaf(m, true));
    Var loss = build(t, vars);
    t.backward(loss);
    for (size_t i = 0; i < inputs.size(); ++i) {
        Matrix fd = finite_diff(eval, inputs[i]);
        double err = max_rel_err(t.grad(vars[i]), fd);
        INFO("input ", i);
        CHECK(err < tol);
    }
}

}  // namespace

TEST_CASE("matmul and matmul_nt values") {
    Tape t;
    Var a = t.leaf(Matrix::from_rows({{1, 2}, {3, 4}}));
    Var b = t.leaf(Matrix::from_rows({{5, 6}, {7, 8}}));
    CHECK(t.value(t.matmul(a, b)) == Matrix::from_rows({{19, 22}, {43, 50}}));
    // a * b^T
    CHECK(t.value(t.matmul_nt(a, b)) == Matrix::from_rows({{17, 23}, {39, 53}}));
}

TEST_CASE("gradients of composite expressions match finite differences") {
    Rng rng(11);
    std::vector<Matrix> inputs = {random_matrix(3, 4, rng), random_matrix(5, 4, rng),
                                  random_matrix(1, 5, rng)};
    check_grads(inputs, [](Tape& t, std::vector<Var>& v) {
        Var y = t.matmul_nt(v[0], v[1]);       // 3x5
        y = t.add_rowvec(y, v[2]);             // bias
        y = t.relu(y);
        return t.mean_all(t.rows_sqnorm(y));
    });
}

TEST_CASE("mask and hadamard gradients") {
    Rng rng(12);
    std::vector<Matrix> inputs = {random_matrix(4, 3, rng), random_matrix(1, 3, rng),
                                  random_matrix(4, 3, rng)};
    check_grads(inputs, [](Tape& t, std::vector<Var>& v) {
        Var y = t.mul_rowvec(v[0], v[1]);
        y = t.hadamard(y, v[2]);
        y = t.sub(y, t.scale(v[0], 0.3));
        return t.mean_all(y);
    });
}

TEST_CASE("concat, slice, gather and splice gradients") {
    Rng rng(13);
    std::vector<Matrix> inputs = {random_matrix(4, 3, rng), random_matrix(4, 2, rng),
                                  random_matrix(2, 5, rng)};
    check_grads(inputs, [](Tape& t, std::vector<Var>& v) {
        Var c = t.concat_cols(v[0], v[1]);       // 4x5
        Var s = t.slice_cols(c, 1, 4);           // 4x3
        Var g = t.gather_rows(c, {0, 2, 2, 3});  // 4x5 with a duplicate
        Var sp = t.splice_rows(g, v[2], {1, 3}); // replace rows 1 and 3
        return t.add(t.mean_all(s), t.mean_all(sp));
    });
}

TEST_CASE("row normalize, dot, exp gradients") {
    Rng rng(14);
    std::vector<Matrix> inputs = {random_matrix(5, 4, rng), random_matrix(5, 4, rng)};
    check_grads(inputs, [](Tape& t, std::vector<Var>& v) {
        Var xn = t.row_l2_normalize(v[0]);
        Var yn = t.row_l2_normalize(v[1]);
        Var cos = t.rows_dot(xn, yn);
        Var e = t.exp_elem(t.scale(cos, -0.01));
        Var d = t.rows_sqnorm(t.sub(xn, yn));
        return t.mean_all(t.add(e, d));
    });
}

TEST_CASE("row_l2_normalize keeps zero rows at zero with zero gradient") {
    Tape t;
    Matrix m(2, 3);
    m(1, 0) = 3.0;
    m(1, 1) = 4.0;
    Var a = t.leaf(m, true);
    Var y = t.row_l2_normalize(a);
    CHECK(t.value(y)(0, 0) == 0.0);
    CHECK(t.value(y)(1, 0) == doctest::Approx(0.6));
    CHECK(t.value(y)(1, 1) == doctest::Approx(0.8));
    t.backward(t.mean_all(y));
    CHECK(t.grad(a)(0, 0) == 0.0);
    CHECK(t.grad(a)(0, 1) == 0.0);
}

TEST_CASE("layer_norm gradients") {
    Rng rng(15);
    std::vector<Matrix> inputs = {random_matrix(4, 6, rng), random_matrix(1, 6, rng, 0.5),
                                  random_matrix(1, 6, rng, 0.5)};
    check_grads(
        inputs,
        [](Tape& t, std::vector<Var>& v) {
            Var y = t.layer_norm(v[0], v[1], v[2]);
            return t.mean_all(t.rows_sqnorm(y));
        },
        1e-6);
}

TEST_CASE("causal softmax rows sum to one over the prefix") {
    Rng rng(16);
    Tape t;
    Var a = t.leaf(random_matrix(4, 4, rng));
    Var p = t.causal_softmax(a);
    const Matrix& P = t.value(p);
    for (int r = 0; r < 4; ++r) {
        double s = 0;
        for (int c = 0; c < 4; ++c) {
            if (c > r) CHECK(P(r, c) == 0.0);
            s += P(r, c);
        }
        CHECK(s == doctest::Approx(1.0));
    }
}

TEST_CASE("causal softmax and cross entropy gradients") {
    Rng rng(17);
    std::vector<Matrix> inputs = {random_matrix(4, 4, rng), random_matrix(4, 3, rng)};
    check_grads(inputs, [](Tape& t, std::vector<Var>& v) {
        Var p = t.causal_softmax(v[0]);
        Var mixed = t.matmul(p, v[1]);  // 4x3
        return t.cross_entropy_rows(mixed, {-1, 0, 2, 1});
    });
}

TEST_CASE("cross entropy of uniform logits is ln(V)") {
    Tape t;
    Var logits = t.leaf(Matrix(3, 50));
    Var ce = t.cross_entropy_rows(logits, {4, 7, 9});
    CHECK(std::abs(t.value(ce)(0, 0) - std::log(50.0)) < 1e-9);
}

TEST_CASE("mean_rows and mean_all gradients") {
    Rng rng(18);
    std::vector<Matrix> inputs = {random_matrix(5, 3, rng)};
    check_grads(inputs, [](Tape& t, std::vector<Var>& v) {
        Var m = t.mean_rows(v[0]);  // 1x3
        return t.mean_all(t.exp_elem(m));
    });
}

TEST_CASE("gradient only flows toward grad-requiring leaves") {
    Tape t;
    Var a = t.leaf(Matrix::from_rows({{1, 2}}), true);
    Var b = t.leaf(Matrix::from_rows({{3, 4}}), false);
    Var y = t.mean_all(t.hadamard(a, b));
    t.backward(y);
    CHECK(t.grad(a)(0, 0) == doctest::Approx(1.5));
    CHECK_THROWS(t.grad(b));
}
