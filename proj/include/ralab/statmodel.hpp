#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ralab/matrix.hpp"
#include "ralab/rng.hpp"

namespace ralab {

struct SyntheticConfig {
    std::size_t d = 64;       // ambient dimension
    std::size_t m = 256;      // dictionary size
    std::size_t k = 4;        // support size per object
    double phi = 0.8;         // lower magnitude bound (phi_sig)
    double Phi = 1.2;         // upper magnitude bound (Phi_sig)
    double eps_noise_raw = 0.02;
    std::size_t n_pairs = 1000;  // pairs per overlap-schedule entry
    std::vector<std::size_t> overlap_schedule = {0, 1, 2, 3, 4};
    std::uint64_t seed = 0;
    bool orthonormal_dictionary = false;  // requires m <= d

    void validate() const;
};

/// One draw of the statistical model: representations are
/// dictionary * (support . magnitude) + effective noise, exactly, with
/// unit-norm rows. Rows 2p and 2p+1 form pair p.
struct SyntheticInstance {
    Matrix dictionary;  // d x m, unit columns
    std::vector<std::vector<std::size_t>> supports;   // per row, sorted, size k
    std::vector<std::vector<double>> magnitudes;      // per row, aligned with supports
    Matrix representations;                           // N x d, unit rows
    Matrix noise_effective;                           // N x d
    std::vector<std::size_t> pair_overlap;            // per pair, the target t
    double eps_dict_max = 0.0;
    double eps_dict_mean = 0.0;
    double eps_noise_effective = 0.0;  // max row norm of the effective noise

    std::size_t n_pairs() const { return pair_overlap.size(); }
    std::size_t k = 0;
    double phi = 0.0;
    double Phi = 0.0;
};

/// Inner-product split for one pair of rows; the three components sum to
/// the inner product up to floating-point error.
struct Decomposition {
    double signal = 0.0;
    double bias = 0.0;
    double noise = 0.0;
    double inner_product = 0.0;
    std::size_t support_overlap = 0;
};

struct DictionaryDraw {
    Matrix dictionary;  // d x m
    double eps_max = 0.0;
    double eps_mean = 0.0;
};

/// m unit columns from independent standard Gaussian directions; with
/// orthonormal set (m <= d), Gram-Schmidt makes the columns exactly
/// orthonormal. The measured mean/max |<A_i, A_j>| come back with it.
DictionaryDraw generate_dictionary(std::size_t d, std::size_t m, Rng& rng,
                                   bool orthonormal = false);

/// Two supports of size k with |Z1 n Z2| = t exactly, drawn uniformly
/// without replacement. Throws Infeasible if 2k - t > m.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> sample_support_pair(
    std::size_t m, std::size_t k, std::size_t t, Rng& rng);

struct PairDraw {
    std::vector<double> m1, m2;     // magnitudes on the supports
    std::vector<double> f1, f2;     // unit representations
    std::vector<double> eta1, eta2; // effective noise rows
};

/// Magnitudes uniform in [phi/sqrt(k), Phi/sqrt(k)], raw noise uniform in
/// the ball of radius eps_noise_raw; f = (s + eta_raw)/|s + eta_raw| and
/// the effective noise is f - s, so unit norm holds exactly.
PairDraw synthesize_pair(const SyntheticConfig& config, const Matrix& dictionary,
                         const std::vector<std::size_t>& z1, const std::vector<std::size_t>& z2,
                         Rng& rng);

/// Full instance: one dictionary, n_pairs pairs per overlap-schedule entry.
SyntheticInstance build_instance(const SyntheticConfig& config);

/// Split <f_i, f_j> into shared-support signal, cross-support dictionary
/// bias, and noise interaction terms.
Decomposition decompose_inner_product(const SyntheticInstance& instance, std::size_t i,
                                      std::size_t j);

struct BoundViolation {
    std::size_t pair = 0;
    std::string which;   // "signal_low", "signal_high", "bias", "noise", "additivity"
    double slack = 0.0;  // negative slack = violation amount
};

struct BoundReport {
    std::size_t pairs_checked = 0;
    std::vector<BoundViolation> violations;
    double min_slack_signal = 0.0;
    double min_slack_bias = 0.0;
    double min_slack_noise = 0.0;
    double max_additivity_error = 0.0;

    bool ok() const { return violations.empty(); }
};

/// Checks, for one decomposed pair, the three component brackets against
/// the instance's measured quantities. Violations are recorded, not thrown.
void check_bounds(const Decomposition& decomposition, const SyntheticInstance& instance,
                  std::size_t pair_index, BoundReport& report);

/// Decompose and bound-check every pair of the instance.
BoundReport check_all_bounds(const SyntheticInstance& instance);

struct Prop1Report {
    bool precondition_met = false;
    double precondition_value = 0.0;  // k eps_dict Phi^2 + 3 eps_noise
    double gamma = 0.0;
    std::size_t pairs = 0;
    std::size_t part1_antecedents = 0;
    std::size_t part1_failures = 0;
    std::size_t part2_antecedents = 0;
    std::size_t part2_failures = 0;
};

/// Checks both implications of the local-neighborhood proposition on every
/// pair, using the instance's measured incoherence and noise quantities.
Prop1Report verify_prop1(const SyntheticInstance& instance, double gamma);

}  // namespace ralab
