// Copyright 2026 The Viz Authors
// SPDX-License-Identifier: Apache-2.0

#include "viz/adapter/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "viz/error.hpp"

namespace viz::adapter {

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols) {
        throw Error(Errc::invalid_shape, "matrix data length " + std::to_string(data_.size()) +
                                             " does not match " + std::to_string(rows) + "x" +
                                             std::to_string(cols));
    }
    if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); })) {
        throw Error(Errc::invalid_shape, "matrix contains non-finite values");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vector matvec(const Matrix& m, std::span<const double> x) {
    if (x.size() != m.cols()) {
        throw Error(Errc::invalid_shape, "vector length " + std::to_string(x.size()) + " does not match " +
                                             std::to_string(m.cols()) + " columns");
    }
    Vector y(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const auto row = m.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw Error(Errc::invalid_shape, "matmul inner dimension mismatch");
    }
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            out(i, j) = acc;
        }
    }
    return out;
}

Matrix transpose(const Matrix& m) {
    Matrix out(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) out(c, r) = m(r, c);
    return out;
}

double max_abs(std::span<const double> v) noexcept {
    double best = 0.0;
    for (double x : v) best = std::max(best, std::fabs(x));
    return best;
}

}  // namespace viz::adapter
