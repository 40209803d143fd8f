#include "ralab/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ralab/kernels.hpp"

namespace ralab {

namespace {

constexpr int kMaxSweeps = 100;
constexpr double kOffTol = 1e-15;

// One-sided Jacobi on a tall matrix (rows >= cols): rotates column pairs of
// a working copy until all pairs are orthogonal, accumulating rotations
// into v. Column norms are then the singular values.
Svd svd_tall(const Matrix& a) {
    const std::size_t n = a.rows(), p = a.cols();
    Matrix b = a;
    Matrix v = Matrix::identity(p);

    auto col_dot = [&](const Matrix& m, std::size_t c1, std::size_t c2) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m.rows(); ++i) acc += m(i, c1) * m(i, c2);
        return acc;
    };

    bool converged = false;
    for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
        converged = true;
        for (std::size_t q = 1; q < p; ++q) {
            for (std::size_t pc = 0; pc < q; ++pc) {
                const double alpha = col_dot(b, pc, pc);
                const double beta = col_dot(b, q, q);
                const double gamma = col_dot(b, pc, q);
                if (alpha == 0.0 || beta == 0.0) continue;
                if (std::fabs(gamma) <= kOffTol * std::sqrt(alpha * beta)) continue;
                converged = false;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double bp = b(i, pc), bq = b(i, q);
                    b(i, pc) = c * bp - s * bq;
                    b(i, q) = s * bp + c * bq;
                }
                for (std::size_t i = 0; i < p; ++i) {
                    const double vp = v(i, pc), vq = v(i, q);
                    v(i, pc) = c * vp - s * vq;
                    v(i, q) = s * vp + c * vq;
                }
            }
        }
    }
    if (!converged) throw NoConvergence("svd: Jacobi sweeps exhausted");

    std::vector<double> sigma(p);
    for (std::size_t j = 0; j < p; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += b(i, j) * b(i, j);
        sigma[j] = std::sqrt(acc);
    }
    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

    Svd out;
    out.s.resize(p);
    out.u = Matrix(n, p);
    out.v = Matrix(p, p);
    double smax = 0.0;
    for (std::size_t j = 0; j < p; ++j) smax = std::max(smax, sigma[order[j]]);
    const double tiny = std::max(1e-300, smax * 1e-13 * static_cast<double>(std::max(n, p)));

    for (std::size_t j = 0; j < p; ++j) {
        const std::size_t src = order[j];
        out.s[j] = sigma[src];
        for (std::size_t i = 0; i < p; ++i) out.v(i, j) = v(i, src);
        if (sigma[src] > tiny) {
            const double inv = 1.0 / sigma[src];
            for (std::size_t i = 0; i < n; ++i) out.u(i, j) = b(i, src) * inv;
        } else {
            out.s[j] = 0.0;
            // Complete with the first coordinate direction that survives
            // orthogonalization against the columns built so far.
            for (std::size_t cand = 0; cand < n; ++cand) {
                std::vector<double> w(n, 0.0);
                w[cand] = 1.0;
                for (std::size_t l = 0; l < j; ++l) {
                    double proj = 0.0;
                    for (std::size_t i = 0; i < n; ++i) proj += w[i] * out.u(i, l);
                    for (std::size_t i = 0; i < n; ++i) w[i] -= proj * out.u(i, l);
                }
                double nrm = 0.0;
                for (double x : w) nrm += x * x;
                nrm = std::sqrt(nrm);
                if (nrm > 0.5) {
                    for (std::size_t i = 0; i < n; ++i) out.u(i, j) = w[i] / nrm;
                    break;
                }
            }
        }
    }
    return out;
}

}  // namespace

Svd svd(const Matrix& m) {
    m.check_finite();
    if (m.rows() >= m.cols()) return svd_tall(m);
    Svd t = svd_tall(m.transposed());
    return Svd{std::move(t.v), std::move(t.s), std::move(t.u)};
}

SymmetricEigen symmetric_eigen(const Matrix& a) {
    if (a.rows() != a.cols()) throw NotSquare("symmetric_eigen: matrix not square");
    const std::size_t n = a.rows();
    Matrix w = a;
    Matrix v = Matrix::identity(n);

    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) off += w(i, j) * w(i, j);
        }
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::fabs(w(p, q)) < 1e-300) continue;
                const double tau = (w(q, q) - w(p, p)) / (2.0 * w(p, q));
                const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    const double wip = w(i, p), wiq = w(i, q);
                    w(i, p) = c * wip - s * wiq;
                    w(i, q) = s * wip + c * wiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double wpi = w(p, i), wqi = w(q, i);
                    w(p, i) = c * wpi - s * wqi;
                    w(q, i) = s * wpi + c * wqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double vip = v(i, p), viq = v(i, q);
                    v(i, p) = c * vip - s * viq;
                    v(i, q) = s * vip + c * viq;
                }
            }
        }
    }

    SymmetricEigen out;
    out.values.resize(n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = w(i, i);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return diag[i] > diag[j]; });
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = diag[order[j]];
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

}  // namespace ralab
