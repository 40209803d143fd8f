#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ralab/matrix.hpp"
#include "ralab/rng.hpp"

namespace ralab {

struct SaeConfig {
    std::size_t d_model = 0;
    std::size_t d_sparse = 0;
    std::size_t k = 0;
    std::size_t batch_size = 1024;
    std::size_t steps = 20000;
    double learning_rate = 1e-3;
    double weight_decay = 1e-4;
    std::size_t resample_period = 2500;
    double resample_cutoff_fraction = 0.8;
    bool decoder_renorm = true;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SaeParams {
    Matrix encoder_weight;             // d_sparse x d_model
    std::vector<double> encoder_bias;  // d_sparse
    Matrix decoder_weight;             // d_model x d_sparse
    std::vector<double> decoder_bias;  // d_model

    std::size_t d_model() const { return decoder_weight.rows(); }
    std::size_t d_sparse() const { return decoder_weight.cols(); }
};

/// One row of sparse codes: strictly increasing feature indices with
/// positive values.
struct SparseRow {
    std::vector<std::size_t> indices;
    std::vector<double> values;

    std::size_t nnz() const { return indices.size(); }
};

/// N x D sparse non-negative code matrix, at most k nonzeros per row.
struct SparseCodeMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<SparseRow> entries;

    double frobenius_norm() const;
};

struct FeatureFilter {
    std::vector<std::size_t> kept;
    std::vector<double> activation_frequency;  // per feature, in [0,1]
};

struct TrainingLogEntry {
    std::size_t step = 0;          // last step of the interval
    double mean_residual = 0.0;    // mean over the interval of batch-mean |x - x_hat|
    std::size_t dead_count = 0;    // features with zero activity in the interval
    std::size_t resampled = 0;
};

struct TrainingLog {
    std::vector<TrainingLogEntry> entries;
};

/// Decoder Kaiming-uniform (bound sqrt(6/d_sparse)), encoder its transpose,
/// encoder bias zero, decoder bias the data column mean.
SaeParams sae_init(const SaeConfig& config, const Matrix& data);

/// relu(We (x - b_dec) + b_e) with all but the k largest entries zeroed;
/// ties broken toward the lower index. Fewer than k nonzeros result when
/// the relu leaves fewer positive candidates.
SparseRow encode_topk(const SaeParams& params, const std::vector<double>& x, std::size_t k);

/// Wd z + b_dec using only the stored nonzeros.
std::vector<double> decode(const SaeParams& params, const SparseRow& z);

/// Encode every row of data.
SparseCodeMatrix encode_matrix(const SaeParams& params, const Matrix& data, std::size_t k);

/// AdamW training of the top-k autoencoder with dead-neuron resampling.
/// Deterministic for a fixed config seed.
std::pair<SaeParams, TrainingLog> sae_train(const SaeConfig& config, const Matrix& data);

/// Reset every feature with zero recorded activity: decoder column becomes
/// the normalized residual of a sampled data point, encoder row 0.1x that
/// direction, encoder bias 0. Returns the number of features resampled.
std::size_t resample_dead(SaeParams& params, const Matrix& data,
                          const std::vector<std::uint64_t>& activity, std::size_t k, Rng& rng);

/// Keep features whose activation frequency lies in [lower, upper]
/// (inclusive both ends).
FeatureFilter filter_features(const SparseCodeMatrix& codes, double upper, double lower);

/// Mean over rows of |x - x_hat|_2 under top-k encoding.
double residual_stats(const SaeParams& params, const Matrix& data, std::size_t k);

struct MagnitudeStats {
    double p5 = 0.0;
    double p95 = 0.0;
    double ratio = 0.0;
};

/// Percentiles of the nonzero code values scaled by sqrt(k), and their
/// ratio p95/p5.
MagnitudeStats magnitude_stats(const SparseCodeMatrix& codes, std::size_t k);

struct IncoherenceStats {
    double mean_abs = 0.0;
    double max_abs = 0.0;
};

/// Mean and max |<A_i, A_j>| over distinct column pairs of a dictionary,
/// columns unit-normalized internally.
IncoherenceStats incoherence_stats(const Matrix& dictionary);

/// Densify selected columns of a code matrix (all columns if kept is
/// empty): used to run the similarity metrics on sparse features.
Matrix densify(const SparseCodeMatrix& codes, const std::vector<std::size_t>& kept);

/// Binary artifact: magic "SAE1", u32 LE d_model/d_sparse/k, then
/// encoder_weight, encoder_bias, decoder_weight, decoder_bias as f32 LE
/// row-major.
void save_sae(const std::string& path, const SaeParams& params, std::size_t k);
std::pair<SaeParams, std::size_t> load_sae(const std::string& path);

}  // namespace ralab
