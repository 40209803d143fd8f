#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ralab/matrix.hpp"
#include "ralab/rng.hpp"

namespace ralab {

/// Identifies one of the similarity metrics. svcca carries the retained
/// dimension c, the knn metrics carry the neighborhood size k.
struct MetricId {
    enum class Kind { cka, cka_unbiased, svcca, knn_overlap, knn_edit };

    Kind kind = Kind::cka;
    std::size_t param = 0;

    static MetricId cka() { return {Kind::cka, 0}; }
    static MetricId cka_unbiased() { return {Kind::cka_unbiased, 0}; }
    static MetricId svcca(std::size_t c) { return {Kind::svcca, c}; }
    static MetricId knn_overlap(std::size_t k) { return {Kind::knn_overlap, k}; }
    static MetricId knn_edit(std::size_t k) { return {Kind::knn_edit, k}; }

    /// Parses "cka", "cka_unbiased", "svcca:10", "knn_overlap:10",
    /// "knn_edit:100".
    static MetricId parse(const std::string& text);

    std::string name() const;

    /// True for knn_edit, where larger values mean less similar.
    bool is_distance() const { return kind == Kind::knn_edit; }

    /// 1 for the similarity metrics, 0 for edit distance.
    double perfect_value() const { return is_distance() ? 0.0 : 1.0; }
};

/// Subsample-averaged alignment between one pair of representations.
struct AlignmentReport {
    MetricId metric;
    std::vector<double> values;  // one per subsample
    double mean = 0.0;
    double std = 0.0;  // population convention
    std::size_t n_points = 0;
    std::uint64_t seed = 0;
};

/// Linear CKA on column-centered matrices:
/// |Gc^T Fc|_F^2 / (|Fc^T Fc|_F * |Gc^T Gc|_F). Returns 0 if either
/// centered matrix is all-zero.
double linear_cka(const Matrix& f, const Matrix& g);

/// Unbiased-HSIC (U-statistic) CKA from hollow Gramians. May be slightly
/// negative. Requires N >= 4.
double unbiased_cka(const Matrix& f, const Matrix& g);

/// SVCCA: column-center, SVD-truncate each side to its top-c components
/// scaled by singular values, then mean canonical correlation (each
/// clamped to [0,1]) between the two projections.
double svcca(const Matrix& f, const Matrix& g, std::size_t c);

/// For each row of a square similarity matrix, the k most similar other
/// indices, ordered by descending similarity, ties by ascending index.
std::vector<std::vector<std::size_t>> knn_indices(const Matrix& gramian, std::size_t k);

/// Mean over points of |KNN_f(i) n KNN_g(i)| / k (sets, order ignored).
double mutual_knn_overlap(const Matrix& f, const Matrix& g, std::size_t k);

/// Mean over points of Levenshtein distance between the ordered k-neighbor
/// lists, divided by k. Zero iff all ordered lists are identical.
double knn_edit_distance(const Matrix& f, const Matrix& g, std::size_t k);

/// Dispatch on MetricId.
double evaluate_metric(const MetricId& id, const Matrix& f, const Matrix& g);

/// Metric averaged over n_samples random row subsets of the given size,
/// drawn without replacement, the same subset applied to both matrices.
AlignmentReport subsampled_alignment(const Matrix& f, const Matrix& g, const MetricId& metric,
                                     std::size_t sample_size, std::size_t n_samples, Rng& rng);

}  // namespace ralab
