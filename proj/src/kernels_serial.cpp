#include <cmath>

#include "ralab/kernels.hpp"

namespace ralab::serial {

// Same reduction orders as the parallel kernels, so outputs are
// bit-identical. Kept for tests and the kernel benchmark.

Matrix unit_normalize_rows(const Matrix& m) {
    const std::size_t n = m.rows(), d = m.cols();
    for (std::size_t i = 0; i < n; ++i) {
        if (norm2(m.row(i), d) < 1e-12) throw ZeroRow(i);
    }
    Matrix out(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        const double inv = 1.0 / norm2(m.row(i), d);
        for (std::size_t j = 0; j < d; ++j) out(i, j) = m(i, j) * inv;
    }
    return out;
}

std::vector<double> column_mean(const Matrix& m) {
    if (m.rows() == 0) throw EmptyMatrix();
    const std::size_t n = m.rows(), d = m.cols();
    std::vector<double> mu(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += m(i, j);
        mu[j] = acc / static_cast<double>(n);
    }
    return mu;
}

Matrix gram(const Matrix& m) {
    const std::size_t n = m.rows(), d = m.cols();
    Matrix g(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = dot(m.row(i), m.row(j), d);
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimMismatch("matmul: inner dimensions differ");
    const std::size_t r = a.rows(), k = a.cols(), c = b.cols();
    Matrix out(r, c);
    for (std::size_t i = 0; i < r; ++i) {
        double* dst = out.row(i);
        for (std::size_t l = 0; l < k; ++l) {
            const double av = a(i, l);
            const double* brow = b.row(l);
            for (std::size_t j = 0; j < c; ++j) dst[j] += av * brow[j];
        }
    }
    return out;
}

Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw DimMismatch("matmul_at_b: row counts differ");
    const std::size_t n = a.rows(), r = a.cols(), c = b.cols();
    Matrix out(r, c);
    for (std::size_t j = 0; j < r; ++j) {
        double* dst = out.row(j);
        for (std::size_t i = 0; i < n; ++i) {
            const double av = a(i, j);
            const double* brow = b.row(i);
            for (std::size_t l = 0; l < c; ++l) dst[l] += av * brow[l];
        }
    }
    return out;
}

std::pair<double, double> column_coherence(const Matrix& a) {
    const std::size_t d = a.rows(), m = a.cols();
    if (m < 2) throw TooFewColumns("column_coherence needs at least 2 columns");
    Matrix cols(m, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < m; ++j) cols(j, i) = a(i, j);
    }
    cols = serial::unit_normalize_rows(cols);
    double total = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = i + 1; j < m; ++j) {
            const double v = std::fabs(dot(cols.row(i), cols.row(j), d));
            acc += v;
            if (v > mx) mx = v;
        }
        total += acc;
    }
    const double pairs = 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
    return {total / pairs, mx};
}

}  // namespace ralab::serial
