#pragma once
#include <cassert>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace graphlm {

// Dense row-major matrix of doubles. Row vectors are 1xN matrices.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0) {}

    static Matrix zeros(int r, int c) { return Matrix(r, c); }

    static Matrix full(int r, int c, double v) {
        Matrix m(r, c);
        for (auto& x : m.a) x = v;
        return m;
    }

    static Matrix row(std::initializer_list<double> xs) {
        Matrix m(1, static_cast<int>(xs.size()));
        int i = 0;
        for (double x : xs) m.a[i++] = x;
        return m;
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rs) {
        Matrix m(static_cast<int>(rs.size()), rs.size() ? static_cast<int>(rs.begin()->size()) : 0);
        int r = 0;
        for (const auto& rr : rs) {
            assert(static_cast<int>(rr.size()) == m.cols);
            int c = 0;
            for (double x : rr) m(r, c++) = x;
            ++r;
        }
        return m;
    }

    double& operator()(int r, int c) {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return a[static_cast<size_t>(r) * cols + c];
    }
    double operator()(int r, int c) const {
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        return a[static_cast<size_t>(r) * cols + c];
    }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
    size_t size() const { return a.size(); }

    bool operator==(const Matrix& o) const { return rows == o.rows && cols == o.cols && a == o.a; }
};

}  // namespace graphlm
