#include "ralab/matching.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "ralab/stats.hpp"

namespace ralab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest-augmenting-path assignment (Jonker-Volgenant style) minimizing
// total cost. Returns the column matched to each row.
std::vector<std::size_t> lap_min(const Matrix& cost) {
    const std::size_t n = cost.rows();
    std::vector<double> u(n, 0.0), v(n, 0.0);
    std::vector<std::ptrdiff_t> col4row(n, -1), row4col(n, -1);
    std::vector<double> shortest(n);
    std::vector<std::size_t> pred(n);
    std::vector<char> scanned_row(n), scanned_col(n);
    std::vector<std::size_t> remaining;

    for (std::size_t cur = 0; cur < n; ++cur) {
        std::fill(shortest.begin(), shortest.end(), kInf);
        std::fill(scanned_row.begin(), scanned_row.end(), 0);
        std::fill(scanned_col.begin(), scanned_col.end(), 0);
        remaining.resize(n);
        for (std::size_t j = 0; j < n; ++j) remaining[j] = j;

        double min_val = 0.0;
        std::size_t i = cur;
        std::ptrdiff_t sink = -1;
        while (sink == -1) {
            scanned_row[i] = 1;
            std::size_t pick = n;
            bool pick_unassigned = false;
            double lowest = kInf;
            // remaining stays ascending, so on plain value ties the lowest
            // column index wins; an unassigned column is preferred so the
            // path terminates sooner.
            for (std::size_t it = 0; it < remaining.size(); ++it) {
                const std::size_t j = remaining[it];
                const double r = min_val + cost(i, j) - u[i] - v[j];
                if (r < shortest[j]) {
                    pred[j] = i;
                    shortest[j] = r;
                }
                const bool unassigned = row4col[j] == -1;
                if (shortest[j] < lowest ||
                    (shortest[j] == lowest && unassigned && !pick_unassigned)) {
                    lowest = shortest[j];
                    pick = it;
                    pick_unassigned = unassigned;
                }
            }
            min_val = lowest;
            if (!(min_val < kInf)) throw Error("assignment: no augmenting path");
            const std::size_t j = remaining[pick];
            if (row4col[j] == -1) {
                sink = static_cast<std::ptrdiff_t>(j);
            } else {
                i = static_cast<std::size_t>(row4col[j]);
            }
            scanned_col[j] = 1;
            remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
        }

        u[cur] += min_val;
        for (std::size_t r = 0; r < n; ++r) {
            if (scanned_row[r] && r != cur) {
                u[r] += min_val - shortest[static_cast<std::size_t>(col4row[r])];
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (scanned_col[j]) v[j] -= min_val - shortest[j];
        }

        std::size_t j = static_cast<std::size_t>(sink);
        for (;;) {
            const std::size_t r = pred[j];
            row4col[j] = static_cast<std::ptrdiff_t>(r);
            const std::ptrdiff_t prev = col4row[r];
            col4row[r] = static_cast<std::ptrdiff_t>(j);
            if (r == cur) break;
            j = static_cast<std::size_t>(prev);
        }
    }

    std::vector<std::size_t> out(n);
    for (std::size_t r = 0; r < n; ++r) out[r] = static_cast<std::size_t>(col4row[r]);
    return out;
}

// Weight-preserving 2-swaps toward the lexicographically smallest optimal
// permutation. Handles the tie patterns that arise in practice (duplicated
// columns, constant blocks); bounded like a bubble sort.
void canonicalize_ties(const Matrix& w, std::vector<std::size_t>& perm) {
    const std::size_t n = perm.size();
    for (std::size_t pass = 0; pass < n; ++pass) {
        bool changed = false;
        for (std::size_t a = 0; a + 1 < n; ++a) {
            for (std::size_t b = a + 1; b < n; ++b) {
                if (perm[a] <= perm[b]) continue;
                const double keep = w(a, perm[a]) + w(b, perm[b]);
                const double swapped = w(a, perm[b]) + w(b, perm[a]);
                if (swapped == keep) {
                    std::swap(perm[a], perm[b]);
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }
}

}  // namespace

std::pair<std::vector<std::size_t>, double> assignment_max(const Matrix& weights) {
    if (weights.rows() != weights.cols()) throw NotSquare("assignment_max: matrix not square");
    weights.check_finite();
    const std::size_t n = weights.rows();
    if (n == 0) return {{}, 0.0};

    Matrix cost(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) cost(i, j) = -weights(i, j);
    }
    auto perm = lap_min(cost);
    canonicalize_ties(weights, perm);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += weights(i, perm[i]);
    return {std::move(perm), total};
}

MatchResult permutation_correlation(const SparseCodeMatrix& z1, const SparseCodeMatrix& z2) {
    if (z1.rows != z2.rows) throw RowCountMismatch("permutation_correlation: row counts differ");
    const std::size_t d = std::max(z1.cols, z2.cols);

    Matrix w(d, d);
    for (std::size_t r = 0; r < z1.rows; ++r) {
        const auto& ra = z1.entries[r];
        const auto& rb = z2.entries[r];
        for (std::size_t qa = 0; qa < ra.nnz(); ++qa) {
            for (std::size_t qb = 0; qb < rb.nnz(); ++qb) {
                w(ra.indices[qa], rb.indices[qb]) += ra.values[qa] * rb.values[qb];
            }
        }
    }

    auto [perm, total] = assignment_max(w);
    MatchResult result;
    result.permutation = std::move(perm);
    result.total_weight = total;
    const double denom = z1.frobenius_norm() * z2.frobenius_norm();
    result.correlation = denom > 0.0 ? total / denom : 0.0;
    return result;
}

NullDistribution permutation_null(const SparseCodeMatrix& z1, const SparseCodeMatrix& z2,
                                  std::size_t n_draws, Rng& rng) {
    if (n_draws < 2) throw Error("permutation_null: need n_draws >= 2");

    NullDistribution null;
    null.observed = permutation_correlation(z1, z2).correlation;

    std::vector<std::vector<std::size_t>> perms;
    perms.reserve(n_draws);
    for (std::size_t s = 0; s < n_draws; ++s) perms.push_back(rng.permutation(z1.rows));

    null.draws.resize(n_draws);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(n_draws); ++s) {
        const auto& phi = perms[static_cast<std::size_t>(s)];
        SparseCodeMatrix permuted;
        permuted.rows = z1.rows;
        permuted.cols = z1.cols;
        permuted.entries.resize(z1.rows);
        for (std::size_t r = 0; r < z1.rows; ++r) permuted.entries[r] = z1.entries[phi[r]];
        null.draws[static_cast<std::size_t>(s)] =
            permutation_correlation(permuted, z2).correlation;
    }

    null.mean = mean(null.draws);
    null.std = population_std(null.draws);
    if (null.std < 1e-12) throw DegenerateNull("permutation_null: null distribution is degenerate");
    null.zscore = (null.observed - null.mean) / null.std;
    return null;
}

}  // namespace ralab
