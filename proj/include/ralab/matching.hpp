#pragma once

#include <cstdint>
#include <vector>

#include "ralab/matrix.hpp"
#include "ralab/rng.hpp"
#include "ralab/sae.hpp"

namespace ralab {

struct MatchResult {
    std::vector<std::size_t> permutation;  // column of z2 matched to each column of z1
    double total_weight = 0.0;
    double correlation = 0.0;
};

struct NullDistribution {
    std::vector<double> draws;
    double mean = 0.0;
    double std = 0.0;  // population convention
    double observed = 0.0;
    double zscore = 0.0;
};

/// Exact maximum-weight perfect matching on a square weight matrix
/// (shortest-augmenting-path solver). Among optimal assignments, ties are
/// resolved toward the lexicographically smallest permutation.
std::pair<std::vector<std::size_t>, double> assignment_max(const Matrix& weights);

/// corr(Z1, Z2) = max over column permutations of <Z1, Z2 P> divided by
/// |Z1|_F |Z2|_F. Narrower inputs are padded with zero columns.
MatchResult permutation_correlation(const SparseCodeMatrix& z1, const SparseCodeMatrix& z2);

/// Distribution of the correlation after uniformly permuting the rows of
/// z1, with the unpermuted value as the observed statistic.
NullDistribution permutation_null(const SparseCodeMatrix& z1, const SparseCodeMatrix& z2,
                                  std::size_t n_draws, Rng& rng);

}  // namespace ralab
