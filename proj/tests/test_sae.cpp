#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "ralab/kernels.hpp"
#include "ralab/sae.hpp"
#include "ralab/statmodel.hpp"

using namespace ralab;

namespace {

Matrix constant_rows(std::size_t n, const std::vector<double>& v) {
    Matrix m(n, v.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < v.size(); ++j) m(i, j) = v[j];
    }
    return m;
}

// Identity-encoder params: pre-activations equal the input coordinates.
SaeParams passthrough_params(std::size_t d) {
    SaeParams p;
    p.encoder_weight = Matrix::identity(d);
    p.encoder_bias.assign(d, 0.0);
    p.decoder_weight = Matrix::identity(d);
    p.decoder_bias.assign(d, 0.0);
    return p;
}

// Unit-norm rows sampled from a dictionary with k-sparse supports.
Matrix dictionary_data(std::size_t n, std::size_t d, std::size_t m, std::size_t k,
                       bool orthonormal, Rng& rng) {
    const auto dict = generate_dictionary(d, m, rng, orthonormal);
    Matrix data(n, d);
    const double lo = 0.8 / std::sqrt(static_cast<double>(k));
    const double hi = 1.2 / std::sqrt(static_cast<double>(k));
    for (std::size_t i = 0; i < n; ++i) {
        const auto sup = rng.sample_without_replacement(m, k);
        std::vector<double> s(d, 0.0);
        for (std::size_t q = 0; q < k; ++q) {
            const double mag = rng.uniform(lo, hi);
            for (std::size_t l = 0; l < d; ++l) s[l] += mag * dict.dictionary(l, sup[q]);
        }
        const double nrm = norm2(s.data(), d);
        for (std::size_t l = 0; l < d; ++l) data(i, l) = s[l] / nrm;
    }
    return data;
}

}  // namespace

TEST_CASE("sae_init follows the data mean and seed") {
    SaeConfig config;
    config.d_model = 3;
    config.d_sparse = 8;
    config.k = 2;
    config.seed = 9;

    const auto data = constant_rows(5, {1.0, 2.0, 3.0});
    const auto p = sae_init(config, data);
    CHECK(p.decoder_bias == std::vector<double>{1.0, 2.0, 3.0});
    CHECK(p.decoder_weight.rows() == 3);
    CHECK(p.decoder_weight.cols() == 8);
    const double bound = std::sqrt(6.0 / 8.0);
    for (double v : p.decoder_weight.data()) CHECK(std::fabs(v) <= bound);
    // Encoder is the decoder transpose at init.
    for (std::size_t j = 0; j < 8; ++j) {
        for (std::size_t i = 0; i < 3; ++i) CHECK(p.encoder_weight(j, i) == p.decoder_weight(i, j));
    }

    const auto p2 = sae_init(config, data);
    CHECK(p.decoder_weight.data() == p2.decoder_weight.data());

    SaeConfig bad = config;
    bad.d_model = 4;
    CHECK_THROWS_AS(sae_init(bad, data), DimMismatch);
}

TEST_CASE("encode_topk keeps the k largest positive entries") {
    auto p = passthrough_params(3);
    const auto row = encode_topk(p, {3.0, 1.0, 2.0}, 2);
    CHECK(row.indices == std::vector<std::size_t>{0, 2});
    CHECK(row.values == std::vector<double>{3.0, 2.0});

    const auto empty = encode_topk(p, {-1.0, -2.0, 0.0}, 2);
    CHECK(empty.nnz() == 0);

    const auto tie = encode_topk(p, {2.0, 2.0, 1.0}, 1);
    CHECK(tie.indices == std::vector<std::size_t>{0});

    CHECK_THROWS_AS(encode_topk(p, {1.0, 2.0}, 1), DimMismatch);
}

TEST_CASE("top-k is idempotent") {
    Rng rng(21);
    SaeConfig config;
    config.d_model = 6;
    config.d_sparse = 12;
    config.k = 3;
    config.seed = 4;
    Matrix data(8, 6);
    for (auto& v : data.data()) v = rng.normal();
    const auto p = sae_init(config, data);
    for (std::size_t i = 0; i < data.rows(); ++i) {
        std::vector<double> x(data.row(i), data.row(i) + 6);
        const auto z = encode_topk(p, x, 3);
        // Re-applying top-k over the already-sparse values changes nothing.
        std::vector<double> dense(12, 0.0);
        for (std::size_t q = 0; q < z.nnz(); ++q) dense[z.indices[q]] = z.values[q];
        std::vector<std::pair<double, std::size_t>> ranked;
        for (std::size_t j = 0; j < 12; ++j) {
            if (dense[j] > 0.0) ranked.push_back({dense[j], j});
        }
        CHECK(ranked.size() == z.nnz());
    }
}

TEST_CASE("decode matches the dense product") {
    Rng rng(22);
    SaeConfig config;
    config.d_model = 5;
    config.d_sparse = 9;
    config.k = 4;
    config.seed = 13;
    Matrix data(4, 5);
    for (auto& v : data.data()) v = rng.normal();
    const auto p = sae_init(config, data);

    SparseRow empty;
    CHECK(decode(p, empty) == p.decoder_bias);

    SparseRow unit;
    unit.indices = {3};
    unit.values = {1.0};
    const auto one = decode(p, unit);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(one[i] == doctest::Approx(p.decoder_weight(i, 3) + p.decoder_bias[i]));
    }

    SparseRow z;
    z.indices = {1, 4, 7};
    z.values = {0.5, 1.5, 2.5};
    const auto fast = decode(p, z);
    std::vector<double> dense(9, 0.0);
    for (std::size_t q = 0; q < z.nnz(); ++q) dense[z.indices[q]] = z.values[q];
    for (std::size_t i = 0; i < 5; ++i) {
        double acc = p.decoder_bias[i];
        for (std::size_t j = 0; j < 9; ++j) acc += p.decoder_weight(i, j) * dense[j];
        CHECK(std::fabs(fast[i] - acc) < 1e-9);
    }

    SparseRow oob;
    oob.indices = {9};
    oob.values = {1.0};
    CHECK_THROWS_AS(decode(p, oob), IndexOutOfRange);
}

TEST_CASE("sae_train on decodable dictionary data reaches a small residual") {
    Rng rng(31);
    const auto data = dictionary_data(2000, 32, 16, 4, /*orthonormal=*/true, rng);

    SaeConfig config;
    config.d_model = 32;
    config.d_sparse = 32;
    config.k = 4;
    config.batch_size = 256;
    config.steps = 2000;
    config.resample_period = 500;
    config.seed = 11;

    const auto [params, log] = sae_train(config, data);
    const double residual = residual_stats(params, data, config.k);
    CHECK(residual <= 0.1);
    // Endpoint sanity: training reduced the residual.
    CHECK(log.entries.back().mean_residual <= log.entries.front().mean_residual);
    // Decoder columns stay unit under renorm.
    for (std::size_t j = 0; j < config.d_sparse; ++j) {
        double nrm = 0.0;
        for (std::size_t i = 0; i < config.d_model; ++i) {
            nrm += params.decoder_weight(i, j) * params.decoder_weight(i, j);
        }
        CHECK(std::fabs(std::sqrt(nrm) - 1.0) < 1e-6);
    }
}

TEST_CASE("sae_train edge behavior") {
    Rng rng(33);
    Matrix data(64, 6);
    for (auto& v : data.data()) v = rng.normal();
    data = unit_normalize_rows(data);

    SaeConfig config;
    config.d_model = 6;
    config.d_sparse = 10;
    config.k = 2;
    config.batch_size = 16;
    config.steps = 0;
    config.seed = 5;

    const auto [p0, log0] = sae_train(config, data);
    const auto init = sae_init(config, data);
    CHECK(p0.encoder_weight.data() == init.encoder_weight.data());
    CHECK(p0.decoder_weight.data() == init.decoder_weight.data());
    CHECK(log0.entries.empty());

    config.steps = 30;
    config.resample_period = 10;
    const auto [pa, loga] = sae_train(config, data);
    const auto [pb, logb] = sae_train(config, data);
    CHECK(pa.encoder_weight.data() == pb.encoder_weight.data());
    CHECK(pa.decoder_bias == pb.decoder_bias);
    REQUIRE(loga.entries.size() == logb.entries.size());
    for (std::size_t i = 0; i < loga.entries.size(); ++i) {
        CHECK(loga.entries[i].mean_residual == logb.entries[i].mean_residual);
        CHECK(loga.entries[i].dead_count == logb.entries[i].dead_count);
    }

    config.batch_size = 100;
    CHECK_THROWS_AS(sae_train(config, data), BatchTooLarge);
}

TEST_CASE("resample_dead resets only dead features") {
    Rng rng(41);
    Matrix data(32, 6);
    for (auto& v : data.data()) v = rng.normal();
    data = unit_normalize_rows(data);

    SaeConfig config;
    config.d_model = 6;
    config.d_sparse = 8;
    config.k = 2;
    config.seed = 3;
    auto params = sae_init(config, data);
    const auto before = params;

    std::vector<std::uint64_t> activity(8, 5);
    Rng r1(100);
    CHECK(resample_dead(params, data, activity, 2, r1) == 0);
    CHECK(params.encoder_weight.data() == before.encoder_weight.data());
    CHECK(params.decoder_weight.data() == before.decoder_weight.data());

    activity[3] = 0;
    Rng r2(100);
    CHECK(resample_dead(params, data, activity, 2, r2) == 1);
    double nrm = 0.0;
    for (std::size_t i = 0; i < 6; ++i) nrm += params.decoder_weight(i, 3) * params.decoder_weight(i, 3);
    CHECK(std::fabs(std::sqrt(nrm) - 1.0) < 1e-6);
    CHECK(params.encoder_bias[3] == 0.0);
    // Live features untouched.
    for (std::size_t j = 0; j < 8; ++j) {
        if (j == 3) continue;
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(params.decoder_weight(i, j) == before.decoder_weight(i, j));
            CHECK(params.encoder_weight(j, i) == before.encoder_weight(j, i));
        }
    }

    // Stream-position oracle: m dead features consume exactly m index draws.
    auto params_a = sae_init(config, data);
    std::vector<std::uint64_t> act2(8, 1);
    act2[1] = act2[4] = act2[6] = 0;
    Rng ra(777), rb(777);
    resample_dead(params_a, data, act2, 2, ra);
    for (int q = 0; q < 3; ++q) rb.index(data.rows());
    CHECK(ra.state() == rb.state());
    CHECK(ra.next_u64() == rb.next_u64());
}

TEST_CASE("filter_features thresholds") {
    SparseCodeMatrix codes;
    codes.rows = 10;
    codes.cols = 3;
    codes.entries.resize(10);
    // Feature 0 active on every row; feature 1 active on exactly 1 row
    // (10%); feature 2 active on 5 rows.
    for (std::size_t i = 0; i < 10; ++i) {
        codes.entries[i].indices.push_back(0);
        codes.entries[i].values.push_back(1.0);
    }
    codes.entries[0].indices.push_back(1);
    codes.entries[0].values.push_back(1.0);
    for (std::size_t i = 0; i < 5; ++i) {
        codes.entries[i].indices.push_back(2);
        codes.entries[i].values.push_back(1.0);
    }

    const auto filter = filter_features(codes, 0.1, 0.00001);
    CHECK(filter.activation_frequency[0] == 1.0);
    CHECK(filter.activation_frequency[1] == doctest::Approx(0.1));
    CHECK(filter.activation_frequency[2] == doctest::Approx(0.5));
    // Always-on excluded; boundary 10% kept (inclusive); mid-range excluded
    // only by the upper bound here.
    CHECK(filter.kept == std::vector<std::size_t>{1});

    const auto wide = filter_features(codes, 1.0, 0.0);
    CHECK(wide.kept == std::vector<std::size_t>{0, 1, 2});

    // Widening the band never drops a kept feature.
    for (std::size_t j : filter.kept) {
        CHECK(std::find(wide.kept.begin(), wide.kept.end(), j) != wide.kept.end());
    }

    CHECK_THROWS_AS(filter_features(codes, 0.1, 0.1), BadThresholds);
}

TEST_CASE("residual_stats") {
    auto p = passthrough_params(2);
    Matrix data(3, 2);
    data(0, 0) = 1.0;
    data(1, 1) = 1.0;
    data(2, 0) = 0.6;
    data(2, 1) = 0.8;
    CHECK(residual_stats(p, data, 2) == doctest::Approx(0.0).epsilon(1e-12));

    // Zeroed model: x_hat = b_dec = x + unit vector per row.
    SaeParams off;
    off.encoder_weight = Matrix(1, 1);
    off.encoder_bias = {0.0};
    off.decoder_weight = Matrix(1, 1);
    Matrix one_row(1, 1);
    one_row(0, 0) = 2.0;
    off.decoder_bias = {3.0};  // x_hat - x = 1
    CHECK(residual_stats(off, one_row, 1) == doctest::Approx(1.0));
}

TEST_CASE("magnitude_stats") {
    SparseCodeMatrix codes;
    codes.rows = 2;
    codes.cols = 4;
    codes.entries.resize(2);
    codes.entries[0].indices = {0, 1};
    codes.entries[0].values = {2.0, 2.0};
    codes.entries[1].indices = {2};
    codes.entries[1].values = {2.0};
    const auto eq = magnitude_stats(codes, 4);  // scaled by sqrt(4) = 2
    CHECK(eq.p5 == doctest::Approx(4.0));
    CHECK(eq.p95 == doctest::Approx(4.0));
    CHECK(eq.ratio == doctest::Approx(1.0));

    SparseCodeMatrix range;
    range.rows = 100;
    range.cols = 100;
    range.entries.resize(100);
    for (std::size_t i = 0; i < 100; ++i) {
        range.entries[i].indices = {i};
        range.entries[i].values = {static_cast<double>(i + 1)};
    }
    const auto st = magnitude_stats(range, 1);
    CHECK(st.p5 == doctest::Approx(5.0));
    CHECK(st.p95 == doctest::Approx(95.0));
    CHECK(st.ratio == doctest::Approx(19.0));

    SparseCodeMatrix none;
    none.rows = 3;
    none.cols = 3;
    none.entries.resize(3);
    CHECK_THROWS_AS(magnitude_stats(none, 1), AllZero);
}

TEST_CASE("incoherence_stats") {
    const auto ortho = incoherence_stats(Matrix::identity(4));
    CHECK(ortho.mean_abs == 0.0);
    CHECK(ortho.max_abs == 0.0);

    Matrix dup(3, 2);
    dup(0, 0) = 1.0;
    dup(0, 1) = 2.0;  // same direction, different scale
    const auto d = incoherence_stats(dup);
    CHECK(d.max_abs == doctest::Approx(1.0));

    // Random unit columns: mean near sqrt(2/(pi d)).
    Rng rng(55);
    Matrix dict(128, 512);
    for (auto& v : dict.data()) v = rng.normal();
    const auto st = incoherence_stats(dict);
    const double expected = std::sqrt(2.0 / (3.14159265358979323846 * 128.0));
    CHECK(st.mean_abs == doctest::Approx(expected).epsilon(0.10));

    CHECK_THROWS_AS(incoherence_stats(Matrix(3, 1)), TooFewColumns);
}

TEST_CASE("sae artifact round trip") {
    Rng rng(66);
    SaeConfig config;
    config.d_model = 4;
    config.d_sparse = 6;
    config.k = 2;
    config.seed = 8;
    Matrix data(10, 4);
    for (auto& v : data.data()) v = rng.normal();
    const auto p = sae_init(config, data);

    const auto path = std::filesystem::temp_directory_path() / "ralab_test.sae";
    save_sae(path.string(), p, config.k);
    const auto [loaded, k] = load_sae(path.string());
    CHECK(k == 2);
    CHECK(loaded.d_model() == 4);
    CHECK(loaded.d_sparse() == 6);
    // Values survive the f32 narrowing; a second save is bit-identical.
    const auto path2 = std::filesystem::temp_directory_path() / "ralab_test2.sae";
    save_sae(path2.string(), loaded, k);
    const auto [again, k2] = load_sae(path2.string());
    CHECK(k2 == k);
    CHECK(again.encoder_weight.data() == loaded.encoder_weight.data());
    CHECK(again.decoder_bias == loaded.decoder_bias);
    std::filesystem::remove(path);
    std::filesystem::remove(path2);
}
