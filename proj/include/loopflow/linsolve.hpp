#pragma once

// Small dense linear systems, sized for loop corrections (a handful of
// unknowns).  Gaussian elimination with partial pivoting is the workhorse;
// an explicit cofactor determinant and a Cramer's-rule solver are provided
// for cross-checking, since determinant ratios are meaningful quantities in
// the loop-correction literature.

#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "loopflow/errors.hpp"

namespace loopflow::linsolve {

using Matrix = std::vector<std::vector<double>>;

struct DenseSystem {
    Matrix matrix;
    std::vector<double> rhs;
};

namespace detail {

inline void check_square(const Matrix& m, const char* where) {
    for (const auto& row : m) {
        if (row.size() != m.size()) {
            throw Error(std::string(where) + ": matrix is not square");
        }
    }
}

}  // namespace detail

// Determinant by cofactor expansion along the first row.  Exact recursion is
// affordable only for the small systems this library deals with, so the
// dimension is capped at 8.
inline double determinant(const Matrix& m) {
    detail::check_square(m, "determinant");
    const std::size_t n = m.size();
    if (n > 8) {
        throw Error("determinant: cofactor expansion supports at most 8x8");
    }
    if (n == 0) return 1.0;
    if (n == 1) return m[0][0];
    if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];

    double det = 0.0;
    Matrix minor(n - 1, std::vector<double>(n - 1));
    for (std::size_t col = 0; col < n; ++col) {
        for (std::size_t i = 1; i < n; ++i) {
            std::size_t k = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == col) continue;
                minor[i - 1][k++] = m[i][j];
            }
        }
        const double sign = (col % 2 == 0) ? 1.0 : -1.0;
        det += sign * m[0][col] * determinant(minor);
    }
    return det;
}

// Solve A x = b by Gaussian elimination with partial pivoting.  A system is
// rejected as singular (or too ill-conditioned to trust) when the determinant
// from the elimination, scaled by the product of row maxima, falls below
// 1e-12; the error carries the smallest pivot encountered.
inline std::vector<double> solve(DenseSystem sys) {
    detail::check_square(sys.matrix, "solve");
    const std::size_t n = sys.matrix.size();
    if (sys.rhs.size() != n) {
        throw Error("solve: rhs size does not match matrix");
    }
    if (n == 0) return {};

    double row_scale = 1.0;
    for (const auto& row : sys.matrix) {
        double mx = 0.0;
        for (double v : row) mx = std::max(mx, std::abs(v));
        if (mx == 0.0) {
            throw SingularSystemError("solve: zero row in matrix", 0.0);
        }
        row_scale *= mx;
    }

    Matrix& a = sys.matrix;
    std::vector<double>& b = sys.rhs;
    double det = 1.0;
    double min_pivot = std::numeric_limits<double>::infinity();

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot_row = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot_row][col])) {
                pivot_row = r;
            }
        }
        if (pivot_row != col) {
            std::swap(a[pivot_row], a[col]);
            std::swap(b[pivot_row], b[col]);
            det = -det;
        }
        const double pivot = a[col][col];
        if (pivot == 0.0) {
            throw SingularSystemError("solve: exact zero pivot", 0.0);
        }
        det *= pivot;
        min_pivot = std::min(min_pivot, std::abs(pivot));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double factor = a[r][col] / pivot;
            if (factor == 0.0) continue;
            a[r][col] = 0.0;
            for (std::size_t c = col + 1; c < n; ++c) {
                a[r][c] -= factor * a[col][c];
            }
            b[r] -= factor * b[col];
        }
    }

    if (std::abs(det) / row_scale < 1e-12) {
        std::ostringstream msg;
        msg << "solve: system is singular to working precision "
            << "(|det|/scale = " << std::abs(det) / row_scale
            << ", smallest pivot = " << min_pivot << ")";
        throw SingularSystemError(msg.str(), min_pivot);
    }

    std::vector<double> x(n, 0.0);
    for (std::size_t i = n; i-- > 0;) {
        double sum = b[i];
        for (std::size_t j = i + 1; j < n; ++j) {
            sum -= a[i][j] * x[j];
        }
        x[i] = sum / a[i][i];
    }
    return x;
}

// Cramer's rule: x_i = det(A with column i replaced by b) / det(A).
// Cross-check path for systems small enough for the cofactor determinant.
inline std::vector<double> solve_cramer(const DenseSystem& sys) {
    detail::check_square(sys.matrix, "solve_cramer");
    const std::size_t n = sys.matrix.size();
    if (sys.rhs.size() != n) {
        throw Error("solve_cramer: rhs size does not match matrix");
    }
    const double det = determinant(sys.matrix);
    if (det == 0.0) {
        throw SingularSystemError("solve_cramer: zero determinant", 0.0);
    }
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        Matrix replaced = sys.matrix;
        for (std::size_t r = 0; r < n; ++r) {
            replaced[r][i] = sys.rhs[r];
        }
        x[i] = determinant(replaced) / det;
    }
    return x;
}

}  // namespace loopflow::linsolve
