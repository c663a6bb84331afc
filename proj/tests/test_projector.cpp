#include <cmath>

#include "doctest.h"
#include "graphlm/projector.hpp"
#include "test_helpers.hpp"

using namespace graphlm;
using graphlm::testing::finite_diff;
using graphlm::testing::max_rel_err;

TEST_CASE("zero input returns the bias") {
    Rng rng(41);
    auto p = ProjectorParams::init(6, 4, rng);
    for (auto& x : p.b.a) x = rng.normal();
    Tape t;
    Var y = project(t, t.leaf(Matrix(1, 4), false), t.leaf(p.w, false), t.leaf(p.b, false));
    CHECK(t.value(y).cols == 6);
    for (int c = 0; c < 6; ++c) CHECK(t.value(y)(0, c) == p.b(0, c));
}

TEST_CASE("linear part scales linearly") {
    Rng rng(42);
    auto p = ProjectorParams::init(5, 3, rng);
    for (auto& x : p.b.a) x = rng.normal();
    Matrix x(1, 3);
    for (auto& v : x.a) v = rng.normal();
    Matrix x2 = x;
    for (auto& v : x2.a) v *= 2.0;

    auto run = [&](const Matrix& in) {
        Tape t;
        return t.value(project(t, t.leaf(in, false), t.leaf(p.w, false), t.leaf(p.b, false)));
    };
    Matrix y0 = run(Matrix(1, 3)), y1 = run(x), y2 = run(x2);
    for (int c = 0; c < 5; ++c)
        CHECK(std::abs((y2(0, c) - y0(0, c)) - 2.0 * (y1(0, c) - y0(0, c))) < 1e-10);
}

TEST_CASE("projector output dimension is the lm dimension for any member count") {
    Rng rng(43);
    auto p = ProjectorParams::init(7, 4, rng);
    for (int n : {1, 3, 9}) {
        Matrix x(n, 4);
        for (auto& v : x.a) v = rng.normal();
        Tape t;
        const Matrix& y =
            t.value(project(t, t.leaf(x, false), t.leaf(p.w, false), t.leaf(p.b, false)));
        CHECK(y.rows == n);
        CHECK(y.cols == 7);
    }
}

TEST_CASE("projector gradients match finite differences") {
    Rng rng(44);
    auto p = ProjectorParams::init(5, 4, rng);
    Matrix x(3, 4);
    for (auto& v : x.a) v = rng.normal();
    auto eval = [&]() {
        Tape t;
        Var y = project(t, t.leaf(x, false), t.leaf(p.w, false), t.leaf(p.b, false));
        return t.value(t.mean_all(t.rows_sqnorm(y)))(0, 0);
    };
    Tape t;
    Var w = t.leaf(p.w, true), b = t.leaf(p.b, true);
    Var y = project(t, t.leaf(x, false), w, b);
    t.backward(t.mean_all(t.rows_sqnorm(y)));
    CHECK(max_rel_err(t.grad(w), finite_diff(eval, p.w)) < 1e-4);
    CHECK(max_rel_err(t.grad(b), finite_diff(eval, p.b)) < 1e-4);
}
