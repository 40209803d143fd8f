#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ralab/matching.hpp"
#include "ralab/rng.hpp"

using namespace ralab;

namespace {

// Factorial enumeration oracle for small assignment problems.
double best_weight_bruteforce(const Matrix& w) {
    const std::size_t n = w.rows();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = -1e300;
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += w(i, perm[i]);
        best = std::max(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

SparseCodeMatrix random_codes(std::size_t n, std::size_t d, std::size_t k, Rng& rng,
                              const std::vector<std::vector<std::size_t>>* shared_supports =
                                  nullptr) {
    SparseCodeMatrix codes;
    codes.rows = n;
    codes.cols = d;
    codes.entries.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> sup =
            shared_supports ? (*shared_supports)[i] : rng.sample_without_replacement(d, k);
        std::sort(sup.begin(), sup.end());
        codes.entries[i].indices = sup;
        for (std::size_t q = 0; q < k; ++q) {
            codes.entries[i].values.push_back(rng.uniform(0.4, 0.6));
        }
    }
    return codes;
}

SparseCodeMatrix permute_columns(const SparseCodeMatrix& z,
                                 const std::vector<std::size_t>& perm) {
    // perm maps old column -> new column.
    SparseCodeMatrix out;
    out.rows = z.rows;
    out.cols = z.cols;
    out.entries.resize(z.rows);
    for (std::size_t i = 0; i < z.rows; ++i) {
        std::vector<std::pair<std::size_t, double>> moved;
        for (std::size_t q = 0; q < z.entries[i].nnz(); ++q) {
            moved.push_back({perm[z.entries[i].indices[q]], z.entries[i].values[q]});
        }
        std::sort(moved.begin(), moved.end());
        for (const auto& [idx, val] : moved) {
            out.entries[i].indices.push_back(idx);
            out.entries[i].values.push_back(val);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("assignment_max examples") {
    Matrix a(2, 2);
    a(0, 0) = 2.0;
    a(0, 1) = 1.0;
    a(1, 0) = 1.0;
    a(1, 1) = 2.0;
    const auto [p1, w1] = assignment_max(a);
    CHECK(p1 == std::vector<std::size_t>{0, 1});
    CHECK(w1 == 4.0);

    Matrix b(2, 2);
    b(0, 1) = 5.0;
    b(1, 0) = 5.0;
    const auto [p2, w2] = assignment_max(b);
    CHECK(p2 == std::vector<std::size_t>{1, 0});
    CHECK(w2 == 10.0);

    const auto [p3, w3] = assignment_max(Matrix::identity(5));
    CHECK(w3 == 5.0);
    CHECK(p3 == std::vector<std::size_t>{0, 1, 2, 3, 4});

    CHECK_THROWS_AS(assignment_max(Matrix(2, 3)), NotSquare);
}

TEST_CASE("assignment_max ties resolve to the lexicographically smallest optimum") {
    Matrix flat(3, 3);
    for (auto& v : flat.data()) v = 1.0;
    const auto [perm, w] = assignment_max(flat);
    CHECK(w == 3.0);
    CHECK(perm == std::vector<std::size_t>{0, 1, 2});

    // Two identical columns: the tie goes to the lower column index for the
    // lower row index.
    Matrix twin(2, 2);
    twin(0, 0) = twin(0, 1) = 1.0;
    twin(1, 0) = twin(1, 1) = 1.0;
    const auto [p, _] = assignment_max(twin);
    CHECK(p == std::vector<std::size_t>{0, 1});
}

TEST_CASE("assignment_max equals enumeration on random instances") {
    Rng rng(101);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.index(5));  // 2..6
        Matrix w(n, n);
        for (auto& v : w.data()) v = rng.uniform(-1.0, 1.0);
        const auto [perm, total] = assignment_max(w);
        CHECK(total == doctest::Approx(best_weight_bruteforce(w)).epsilon(1e-12));
        // The returned permutation achieves the reported weight.
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += w(i, perm[i]);
        CHECK(sum == doctest::Approx(total).epsilon(1e-12));
    }
}

TEST_CASE("permutation_correlation recovers column permutations") {
    Rng rng(7);
    const auto z1 = random_codes(50, 16, 4, rng);
    const auto applied = rng.permutation(16);
    const auto z2 = permute_columns(z1, applied);

    const auto result = permutation_correlation(z1, z2);
    CHECK(result.correlation == doctest::Approx(1.0).epsilon(1e-9));
    // The recovered permutation inverts the applied one wherever the column
    // actually carries mass.
    for (std::size_t c = 0; c < 16; ++c) {
        bool used = false;
        for (std::size_t i = 0; i < z1.rows && !used; ++i) {
            used = std::find(z1.entries[i].indices.begin(), z1.entries[i].indices.end(), c) !=
                   z1.entries[i].indices.end();
        }
        if (used) CHECK(result.permutation[c] == applied[c]);
    }
}

TEST_CASE("permutation_correlation trivial cases") {
    // Disjoint row supports: no weight anywhere.
    SparseCodeMatrix a, b;
    a.rows = b.rows = 3;
    a.cols = b.cols = 6;
    a.entries.resize(3);
    b.entries.resize(3);
    for (std::size_t i = 0; i < 3; ++i) {
        a.entries[i].indices = {i};
        a.entries[i].values = {1.0};
        b.entries[i].indices = {3 + i};
        b.entries[i].values = {1.0};
    }
    // Weight matrix has support only on (i, 3+i): those pair up and the
    // correlation is positive; truly disjoint OBJECT supports need rows
    // that never co-activate, so zero out one side instead.
    SparseCodeMatrix empty = b;
    for (auto& row : empty.entries) {
        row.indices.clear();
        row.values.clear();
    }
    const auto zero = permutation_correlation(a, empty);
    CHECK(zero.correlation == 0.0);

    SparseCodeMatrix wrong = b;
    wrong.rows = 2;
    wrong.entries.resize(2);
    CHECK_THROWS_AS(permutation_correlation(a, wrong), RowCountMismatch);

    // Column padding: a narrow second argument is padded with zeros.
    SparseCodeMatrix narrow = a;
    narrow.cols = 2;
    for (auto& row : narrow.entries) {
        row.indices.assign(1, 0);
        row.values.assign(1, 0.5);
    }
    const auto padded = permutation_correlation(a, narrow);
    CHECK(padded.permutation.size() == 6);
}

TEST_CASE("permutation_correlation matches brute force on truncated problems") {
    Rng rng(17);
    for (int trial = 0; trial < 25; ++trial) {
        auto z1 = random_codes(50, 6, 2, rng);
        auto z2 = random_codes(50, 6, 2, rng);
        Matrix w(6, 6);
        for (std::size_t r = 0; r < 50; ++r) {
            for (std::size_t qa = 0; qa < z1.entries[r].nnz(); ++qa) {
                for (std::size_t qb = 0; qb < z2.entries[r].nnz(); ++qb) {
                    w(z1.entries[r].indices[qa], z2.entries[r].indices[qb]) +=
                        z1.entries[r].values[qa] * z2.entries[r].values[qb];
                }
            }
        }
        const double best = best_weight_bruteforce(w);
        const auto res = permutation_correlation(z1, z2);
        CHECK(res.total_weight == doctest::Approx(best).epsilon(1e-12));
        CHECK(res.correlation ==
              doctest::Approx(best / (z1.frobenius_norm() * z2.frobenius_norm())).epsilon(1e-12));
        CHECK(res.correlation >= 0.0);
        CHECK(res.correlation <= 1.0 + 1e-12);
    }
}

TEST_CASE("correlation is invariant to shared row permutations and column permutations") {
    Rng rng(23);
    const auto z1 = random_codes(40, 12, 3, rng);
    const auto z2 = random_codes(40, 12, 3, rng);
    const double base = permutation_correlation(z1, z2).correlation;

    const auto rowperm = rng.permutation(40);
    SparseCodeMatrix p1 = z1, p2 = z2;
    for (std::size_t i = 0; i < 40; ++i) {
        p1.entries[i] = z1.entries[rowperm[i]];
        p2.entries[i] = z2.entries[rowperm[i]];
    }
    CHECK(permutation_correlation(p1, p2).correlation == doctest::Approx(base).epsilon(1e-9));

    const auto colperm = rng.permutation(12);
    CHECK(permutation_correlation(permute_columns(z1, colperm), z2).correlation ==
          doctest::Approx(base).epsilon(1e-9));
    CHECK(permutation_correlation(z1, permute_columns(z2, colperm)).correlation ==
          doctest::Approx(base).epsilon(1e-9));
}

TEST_CASE("permutation_null separates paired from unpaired codes") {
    Rng rng(31);
    std::vector<std::vector<std::size_t>> shared;
    for (std::size_t i = 0; i < 300; ++i) shared.push_back(rng.sample_without_replacement(32, 4));
    const auto z1 = random_codes(300, 32, 4, rng, &shared);
    const auto z2 = random_codes(300, 32, 4, rng, &shared);

    Rng null_rng(1);
    const auto null = permutation_null(z1, z2, 50, null_rng);
    CHECK(null.zscore > 10.0);
    CHECK(null.draws.size() == 50);

    // Determinism.
    Rng a(5), b(5);
    const auto na = permutation_null(z1, z2, 10, a);
    const auto nb = permutation_null(z1, z2, 10, b);
    CHECK(na.draws == nb.draws);
    CHECK(na.zscore == nb.zscore);

    Rng c(6);
    CHECK_THROWS_AS(permutation_null(z1, z2, 1, c), Error);
}
