#include "ralab/kernels.hpp"

#include <cmath>
#include <cstdint>

namespace ralab {

Matrix unit_normalize_rows(const Matrix& m) {
    const std::int64_t n = static_cast<std::int64_t>(m.rows());
    const std::size_t d = m.cols();
    // Scan norms first so the error index is the lowest offending row.
    for (std::int64_t i = 0; i < n; ++i) {
        if (norm2(m.row(i), d) < 1e-12) throw ZeroRow(static_cast<std::size_t>(i));
    }
    Matrix out(m.rows(), d);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const double* src = m.row(i);
        double* dst = out.row(i);
        const double inv = 1.0 / norm2(src, d);
        for (std::size_t j = 0; j < d; ++j) dst[j] = src[j] * inv;
    }
    return out;
}

std::vector<double> column_mean(const Matrix& m) {
    if (m.rows() == 0) throw EmptyMatrix();
    const std::size_t n = m.rows(), d = m.cols();
    std::vector<double> mu(d, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < static_cast<std::int64_t>(d); ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += m(i, static_cast<std::size_t>(j));
        mu[static_cast<std::size_t>(j)] = acc / static_cast<double>(n);
    }
    return mu;
}

Matrix gram(const Matrix& m) {
    const std::size_t n = m.rows(), d = m.cols();
    Matrix g(n, n);
#pragma omp parallel for schedule(dynamic, 8)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        for (std::size_t j = ii; j < n; ++j) {
            const double v = dot(m.row(ii), m.row(j), d);
            g(ii, j) = v;
            g(j, ii) = v;
        }
    }
    return g;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimMismatch("matmul: inner dimensions differ");
    const std::size_t r = a.rows(), k = a.cols(), c = b.cols();
    Matrix out(r, c);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(r); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        double* dst = out.row(ii);
        for (std::size_t l = 0; l < k; ++l) {
            const double av = a(ii, l);
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
#pragma omp parallel for schedule(static)
    for (std::int64_t j = 0; j < static_cast<std::int64_t>(r); ++j) {
        const std::size_t jj = static_cast<std::size_t>(j);
        double* dst = out.row(jj);
        for (std::size_t i = 0; i < n; ++i) {
            const double av = a(i, jj);
            const double* brow = b.row(i);
            for (std::size_t l = 0; l < c; ++l) dst[l] += av * brow[l];
        }
    }
    return out;
}

std::pair<double, double> column_coherence(const Matrix& a) {
    const std::size_t d = a.rows(), m = a.cols();
    if (m < 2) throw TooFewColumns("column_coherence needs at least 2 columns");
    // Work on the transpose so columns are contiguous.
    Matrix cols(m, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < m; ++j) cols(j, i) = a(i, j);
    }
    cols = unit_normalize_rows(cols);
    std::vector<double> row_sum(m, 0.0), row_max(m, 0.0);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(m); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        double acc = 0.0, mx = 0.0;
        for (std::size_t j = ii + 1; j < m; ++j) {
            const double v = std::fabs(dot(cols.row(ii), cols.row(j), d));
            acc += v;
            if (v > mx) mx = v;
        }
        row_sum[ii] = acc;
        row_max[ii] = mx;
    }
    double total = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        total += row_sum[i];
        if (row_max[i] > mx) mx = row_max[i];
    }
    const double pairs = 0.5 * static_cast<double>(m) * static_cast<double>(m - 1);
    return {total / pairs, mx};
}

}  // namespace ralab
