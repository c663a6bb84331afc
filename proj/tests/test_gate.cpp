#include <cmath>

#include "doctest.h"
#include "graphlm/gate.hpp"
#include "test_helpers.hpp"

using namespace graphlm;
using graphlm::testing::finite_diff;
using graphlm::testing::max_rel_err;

namespace {

Matrix gate_eval(const Matrix& x, const Matrix& w_rel, const Matrix& m_rel, const Matrix& w_inv,
                 const Matrix& m_inv, const Matrix& w_agg) {
    Tape t;
    Var y = gate_forward(t, t.leaf(x, false), t.leaf(w_rel, false), t.leaf(m_rel, false),
                         t.leaf(w_inv, false), t.leaf(m_inv, false), t.leaf(w_agg, false));
    return t.value(y);
}

const Matrix kIdentity2 = Matrix::from_rows({{1, 0}, {0, 1}});
const Matrix kAgg2 = Matrix::from_rows({{1, 0, 1, 0}, {0, 1, 0, 1}});

}  // namespace

TEST_CASE("identity weights with open masks sum both branches") {
    Matrix y = gate_eval(Matrix::row({3, 4}), kIdentity2, Matrix::row({1, 1}), kIdentity2,
                         Matrix::row({1, 1}), kAgg2);
    CHECK(y(0, 0) == 6.0);
    CHECK(y(0, 1) == 8.0);
}

TEST_CASE("closed task branch passes only the invariant branch") {
    Matrix y = gate_eval(Matrix::row({3, 4}), kIdentity2, Matrix::row({0, 0}), kIdentity2,
                         Matrix::row({1, 1}), kAgg2);
    CHECK(y(0, 0) == 3.0);
    CHECK(y(0, 1) == 4.0);
}

TEST_CASE("partially open task mask scales its channel") {
    Matrix y = gate_eval(Matrix::row({3, 4}), kIdentity2, Matrix::row({2, 0}), kIdentity2,
                         Matrix::row({1, 1}), kAgg2);
    CHECK(y(0, 0) == 9.0);
    CHECK(y(0, 1) == 4.0);
}

TEST_CASE("gate is linear in its input") {
    Rng rng(21);
    int g = 5;
    auto p = GateParams::init(g, g, rng);
    for (auto& v : p.m_rel.a) v = rng.normal();
    Matrix x(1, g), y(1, g);
    for (auto& v : x.a) v = rng.normal();
    for (auto& v : y.a) v = rng.normal();
    double a = 0.7, b = -1.3;
    Matrix combo(1, g);
    for (int c = 0; c < g; ++c) combo(0, c) = a * x(0, c) + b * y(0, c);

    auto f = [&](const Matrix& in) {
        return gate_eval(in, p.w_rel, p.m_rel, p.w_inv, p.m_inv, p.w_agg);
    };
    Matrix fx = f(x), fy = f(y), fc = f(combo);
    for (int c = 0; c < g; ++c)
        CHECK(std::abs(fc(0, c) - (a * fx(0, c) + b * fy(0, c))) < 1e-10);
}

TEST_CASE("zero task mask makes the output independent of the task weight") {
    Rng rng(22);
    int g = 4;
    auto p = GateParams::init(g, g, rng);
    p.m_rel = Matrix(1, g);  // zeros
    Matrix x(2, g);
    for (auto& v : x.a) v = rng.normal();
    Matrix y1 = gate_eval(x, p.w_rel, p.m_rel, p.w_inv, p.m_inv, p.w_agg);
    Matrix w_rel2 = p.w_rel;
    for (auto& v : w_rel2.a) v = rng.normal();  // completely different weights
    Matrix y2 = gate_eval(x, w_rel2, p.m_rel, p.w_inv, p.m_inv, p.w_agg);
    CHECK(y1 == y2);
}

TEST_CASE("gate gradients match finite differences for every tensor") {
    Rng rng(23);
    int g = 4, g_out = 3;
    auto p = GateParams::init(g, g_out, rng);
    for (auto& v : p.m_rel.a) v = rng.normal();
    Matrix x(3, g);
    for (auto& v : x.a) v = rng.normal();

    std::vector<Matrix*> tensors = {&p.w_rel, &p.m_rel, &p.w_inv, &p.m_inv, &p.w_agg};
    auto eval = [&]() {
        Tape t;
        Var y = gate_forward(t, t.leaf(x, false), t.leaf(p.w_rel, false),
                             t.leaf(p.m_rel, false), t.leaf(p.w_inv, false),
                             t.leaf(p.m_inv, false), t.leaf(p.w_agg, false));
        return t.value(t.mean_all(t.rows_sqnorm(y)))(0, 0);
    };
    Tape t;
    Var wr = t.leaf(p.w_rel, true), mr = t.leaf(p.m_rel, true), wi = t.leaf(p.w_inv, true),
        mi = t.leaf(p.m_inv, true), wa = t.leaf(p.w_agg, true);
    Var y = gate_forward(t, t.leaf(x, false), wr, mr, wi, mi, wa);
    t.backward(t.mean_all(t.rows_sqnorm(y)));
    std::vector<Var> vars = {wr, mr, wi, mi, wa};
    for (size_t i = 0; i < tensors.size(); ++i) {
        Matrix fd = finite_diff(eval, *tensors[i]);
        CHECK(max_rel_err(t.grad(vars[i]), fd) < 1e-4);
    }
}

TEST_CASE("task text encoding is deterministic with the configured width") {
    Rng rng(24);
    auto p = TaskTextEncoderParams::init(6, 64, rng);
    Matrix a = encode_task_text("classify products by type", p);
    Matrix b = encode_task_text("classify products by type", p);
    CHECK(a == b);
    CHECK(a.rows == 1);
    CHECK(a.cols == 6);
    Matrix c = encode_task_text("summarize this node", p);
    CHECK(a != c);
}

TEST_CASE("empty task text falls back to the small open mask") {
    Rng rng(25);
    auto p = TaskTextEncoderParams::init(5, 32, rng);
    Matrix m = encode_task_text("", p);
    for (int c = 0; c < 5; ++c) CHECK(m(0, c) == 0.01);
    // Punctuation-only text has no words either.
    Matrix m2 = encode_task_text("?!,", p);
    for (int c = 0; c < 5; ++c) CHECK(m2(0, c) == 0.01);
}

TEST_CASE("tape task-text encoding matches the plain version and trains alpha") {
    Rng rng(26);
    auto p = TaskTextEncoderParams::init(4, 48, rng);
    const std::string text = "which of these categories fits?";
    Matrix plain = encode_task_text(text, p);
    Tape t;
    Var proj = t.leaf(p.projection, true);
    Var m = encode_task_text_var(t, text, proj);
    CHECK(t.value(m) == plain);
    t.backward(t.mean_all(m));
    auto eval = [&]() {
        Tape t2;
        return t2.value(t2.mean_all(encode_task_text_var(t2, text, t2.leaf(p.projection, false))))(0, 0);
    };
    Matrix fd = finite_diff(eval, p.projection);
    CHECK(max_rel_err(t.grad(proj), fd) < 1e-6);
}

TEST_CASE("adapter tunable set size follows the closed formula") {
    // g = g_out = 132: 132 + 132^2 + 2*132*132 = 52404 numbers.
    int64_t g = 132, g_out = 132;
    CHECK(g + g * g + 2 * g * g_out == 52404);
}
