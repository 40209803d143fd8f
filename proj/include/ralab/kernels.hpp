#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "ralab/matrix.hpp"

namespace ralab {

// Dense kernels. Each output element is computed by a single fixed serial
// reduction, and parallelism (OpenMP, when enabled) is only over output
// elements, so results are bit-identical to the serial reference in
// ralab::serial regardless of thread count.

/// Scale every row to unit Euclidean norm. Throws ZeroRow if a row norm
/// is below 1e-12.
Matrix unit_normalize_rows(const Matrix& m);

/// Per-column mean over rows. Throws EmptyMatrix.
std::vector<double> column_mean(const Matrix& m);

/// m * m^T: the N x N matrix of pairwise row inner products.
Matrix gram(const Matrix& m);

/// a * b with a: r x k, b: k x c.
Matrix matmul(const Matrix& a, const Matrix& b);

/// a^T * b with a: n x r, b: n x c. Used for cross-covariances.
Matrix matmul_at_b(const Matrix& a, const Matrix& b);

/// (mean, max) of |<a_i, a_j>| over distinct column pairs i < j, after
/// normalizing columns to unit length. Throws TooFewColumns if cols < 2.
std::pair<double, double> column_coherence(const Matrix& a);

/// Four independent accumulator chains: a fixed, machine-independent
/// summation order that still leaves the FMA ports busy. Shared by the
/// parallel kernels and the serial reference, so the two stay
/// bit-identical.
inline double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    const std::size_t n4 = n & ~std::size_t{3};
    std::size_t i = 0;
    for (; i < n4; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    double tail = 0.0;
    for (; i < n; ++i) tail += a[i] * b[i];
    return ((s0 + s1) + (s2 + s3)) + tail;
}

inline double norm2(const double* a, std::size_t n) { return std::sqrt(dot(a, a, n)); }

namespace serial {

// Reference implementations: identical contracts, plain loops, no pragmas.
Matrix unit_normalize_rows(const Matrix& m);
std::vector<double> column_mean(const Matrix& m);
Matrix gram(const Matrix& m);
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_at_b(const Matrix& a, const Matrix& b);
std::pair<double, double> column_coherence(const Matrix& a);

}  // namespace serial

}  // namespace ralab
