#include "ralab/sae.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "ralab/kernels.hpp"
#include "ralab/stats.hpp"

namespace ralab {

void SaeConfig::validate() const {
    if (d_model < 1 || d_sparse < 1 || k < 1 || batch_size < 1) {
        throw Error("sae config: counts must be >= 1");
    }
    if (k > d_sparse) throw Error("sae config: k must be <= d_sparse");
    if (!(resample_cutoff_fraction > 0.0 && resample_cutoff_fraction <= 1.0)) {
        throw Error("sae config: resample_cutoff_fraction must be in (0,1]");
    }
}

double SparseCodeMatrix::frobenius_norm() const {
    double acc = 0.0;
    for (const auto& row : entries) {
        for (double v : row.values) acc += v * v;
    }
    return std::sqrt(acc);
}

SaeParams sae_init(const SaeConfig& config, const Matrix& data) {
    config.validate();
    if (data.cols() != config.d_model) throw DimMismatch("sae_init: data width != d_model");
    if (data.rows() == 0) throw EmptyMatrix();

    Rng rng(config.seed);
    const std::size_t d = config.d_model, ds = config.d_sparse;

    SaeParams p;
    p.decoder_weight = Matrix(d, ds);
    const double bound = std::sqrt(6.0 / static_cast<double>(ds));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < ds; ++j) {
            p.decoder_weight(i, j) = rng.uniform(-bound, bound);
        }
    }
    // Encoder starts as the decoder transpose; bias zero.
    p.encoder_weight = Matrix(ds, d);
    for (std::size_t j = 0; j < ds; ++j) {
        for (std::size_t i = 0; i < d; ++i) p.encoder_weight(j, i) = p.decoder_weight(i, j);
    }
    p.encoder_bias.assign(ds, 0.0);
    p.decoder_bias = column_mean(data);
    return p;
}

namespace {

// Top-k of the pre-activation vector f: positive entries only, ties broken
// toward the lower index. Result sorted by ascending index. The scratch
// buffer avoids per-call allocation in the training loop.
void select_topk_into(const std::vector<double>& f, std::size_t k, SparseRow& row,
                      std::vector<std::size_t>& scratch) {
    if (k <= 16) {
        // Insertion into a small (value desc, index asc) buffer; scanning
        // ascending j keeps the lower index on value ties.
        scratch.clear();
        scratch.resize(k);
        double vals[16];
        std::size_t cnt = 0;
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double v = f[j];
            if (v <= 0.0) continue;
            if (cnt == k && v <= vals[cnt - 1]) continue;
            std::size_t p = cnt < k ? cnt : k - 1;
            while (p > 0 && vals[p - 1] < v) {
                vals[p] = vals[p - 1];
                scratch[p] = scratch[p - 1];
                --p;
            }
            vals[p] = v;
            scratch[p] = j;
            if (cnt < k) ++cnt;
        }
        scratch.resize(cnt);
    } else {
        scratch.clear();
        for (std::size_t j = 0; j < f.size(); ++j) {
            if (f[j] > 0.0) scratch.push_back(j);
        }
        const std::size_t keep = std::min(k, scratch.size());
        std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(keep),
                          scratch.end(), [&](std::size_t a, std::size_t b) {
                              if (f[a] != f[b]) return f[a] > f[b];
                              return a < b;
                          });
        scratch.resize(keep);
    }
    std::sort(scratch.begin(), scratch.end());
    row.indices.assign(scratch.begin(), scratch.end());
    row.values.clear();
    for (std::size_t j : scratch) row.values.push_back(f[j]);
}

SparseRow select_topk(const std::vector<double>& f, std::size_t k) {
    SparseRow row;
    std::vector<std::size_t> scratch;
    scratch.reserve(f.size());
    select_topk_into(f, k, row, scratch);
    return row;
}

std::vector<double> preactivations(const SaeParams& p, const double* x) {
    const std::size_t d = p.d_model(), ds = p.d_sparse();
    std::vector<double> xt(d);
    for (std::size_t i = 0; i < d; ++i) xt[i] = x[i] - p.decoder_bias[i];
    std::vector<double> f(ds);
    for (std::size_t j = 0; j < ds; ++j) {
        f[j] = p.encoder_bias[j] + dot(p.encoder_weight.row(j), xt.data(), d);
    }
    return f;
}

}  // namespace

SparseRow encode_topk(const SaeParams& params, const std::vector<double>& x, std::size_t k) {
    if (x.size() != params.d_model()) throw DimMismatch("encode_topk: input width != d_model");
    auto f = preactivations(params, x.data());
    for (double& v : f) v = std::max(v, 0.0);
    return select_topk(f, k);
}

std::vector<double> decode(const SaeParams& params, const SparseRow& z) {
    const std::size_t d = params.d_model(), ds = params.d_sparse();
    std::vector<double> out = params.decoder_bias;
    for (std::size_t q = 0; q < z.nnz(); ++q) {
        const std::size_t j = z.indices[q];
        if (j >= ds) throw IndexOutOfRange("decode: feature index out of range");
        const double v = z.values[q];
        for (std::size_t i = 0; i < d; ++i) out[i] += v * params.decoder_weight(i, j);
    }
    return out;
}

SparseCodeMatrix encode_matrix(const SaeParams& params, const Matrix& data, std::size_t k) {
    if (data.cols() != params.d_model()) throw DimMismatch("encode_matrix: width != d_model");
    SparseCodeMatrix codes;
    codes.rows = data.rows();
    codes.cols = params.d_sparse();
    codes.entries.resize(codes.rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(data.rows()); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        auto f = preactivations(params, data.row(ii));
        for (double& v : f) v = std::max(v, 0.0);
        codes.entries[ii] = select_topk(f, k);
    }
    return codes;
}

std::size_t resample_dead(SaeParams& params, const Matrix& data,
                          const std::vector<std::uint64_t>& activity, std::size_t k, Rng& rng) {
    const std::size_t ds = params.d_sparse(), d = params.d_model();
    if (activity.size() != ds) throw DimMismatch("resample_dead: activity length != d_sparse");

    std::vector<std::size_t> dead;
    for (std::size_t j = 0; j < ds; ++j) {
        if (activity[j] == 0) dead.push_back(j);
    }
    if (dead.empty()) return 0;

    // All residuals are computed under the current model before any reset.
    std::vector<std::vector<double>> residuals(dead.size());
    for (std::size_t q = 0; q < dead.size(); ++q) {
        const std::size_t row = static_cast<std::size_t>(rng.index(data.rows()));
        std::vector<double> x(data.row(row), data.row(row) + d);
        const auto xhat = decode(params, encode_topk(params, x, k));
        std::vector<double> r(d);
        for (std::size_t i = 0; i < d; ++i) r[i] = x[i] - xhat[i];
        residuals[q] = std::move(r);
    }
    for (std::size_t q = 0; q < dead.size(); ++q) {
        const std::size_t j = dead[q];
        const double nrm = norm2(residuals[q].data(), d) + 1e-8;
        for (std::size_t i = 0; i < d; ++i) {
            const double u = residuals[q][i] / nrm;
            params.decoder_weight(i, j) = u;
            params.encoder_weight(j, i) = 0.1 * u;
        }
        params.encoder_bias[j] = 0.0;
    }
    return dead.size();
}

namespace {

// AdamW with decoupled weight decay, beta1 0.9, beta2 0.999, eps 1e-8.
struct Adam {
    std::vector<double> m, v;
    double lr, wd;
    std::uint64_t t = 0;

    Adam(std::size_t n, double lr_, double wd_) : m(n, 0.0), v(n, 0.0), lr(lr_), wd(wd_) {}

    void step_begin() { ++t; }

    void update(double* p, const double* g, std::size_t lo, std::size_t hi) {
        const double b1c = 1.0 - std::pow(0.9, static_cast<double>(t));
        const double b2c = 1.0 - std::pow(0.999, static_cast<double>(t));
        for (std::size_t i = lo; i < hi; ++i) {
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
            const double mh = m[i] / b1c;
            const double vh = v[i] / b2c;
            p[i] -= lr * (mh / (std::sqrt(vh) + 1e-8) + wd * p[i]);
        }
    }
};

}  // namespace

std::pair<SaeParams, TrainingLog> sae_train(const SaeConfig& config, const Matrix& data) {
    config.validate();
    if (data.rows() < config.batch_size) throw BatchTooLarge("batch_size exceeds data rows");

    SaeParams params = sae_init(config, data);
    TrainingLog log;
    if (config.steps == 0) return {std::move(params), std::move(log)};

    const std::size_t d = config.d_model, ds = config.d_sparse, k = config.k;
    const std::size_t batch = config.batch_size, total_steps = config.steps;
    const std::size_t n = data.rows();

    Rng rng(config.seed + 0x5157AE00);  // training stream, distinct from init

    // The decoder is kept feature-major (d_sparse x d_model) during the
    // loop so per-feature columns are contiguous; it is transposed back
    // into params at resample boundaries and on return.
    std::vector<double> dec_t(ds * d);
    auto pull_decoder = [&] {
        for (std::size_t j = 0; j < ds; ++j) {
            for (std::size_t i = 0; i < d; ++i) dec_t[j * d + i] = params.decoder_weight(i, j);
        }
    };
    auto push_decoder = [&] {
        for (std::size_t j = 0; j < ds; ++j) {
            for (std::size_t i = 0; i < d; ++i) params.decoder_weight(i, j) = dec_t[j * d + i];
        }
    };
    pull_decoder();

    Adam adam_we(ds * d, config.learning_rate, config.weight_decay);
    Adam adam_be(ds, config.learning_rate, config.weight_decay);
    Adam adam_wd(ds * d, config.learning_rate, config.weight_decay);  // feature-major
    Adam adam_bd(d, config.learning_rate, config.weight_decay);

    std::vector<std::uint64_t> activity(ds, 0);
    std::vector<std::size_t> rows(batch);
    std::vector<double> xt(batch * d), err(batch * d), gxt(batch * d);
    std::vector<SparseRow> codes(batch);
    std::vector<double> gf_rows(batch * k);  // code gradients aligned with codes
    std::vector<double> row_residual(batch);
    std::vector<double> g_we(ds * d), g_be(ds), g_wd(ds * d), g_bd(d);
    // Per-feature gather lists: (batch row, slot in that row's code).
    struct Hit {
        std::size_t row;
        std::size_t slot;
    };
    std::vector<std::vector<Hit>> hits(ds);

    const double cutoff = config.resample_cutoff_fraction * static_cast<double>(total_steps);
    const double scale = 2.0 / (static_cast<double>(batch) * static_cast<double>(d));
    double interval_residual = 0.0;
    std::size_t interval_steps = 0;

    for (std::size_t t = 1; t <= total_steps; ++t) {
        for (std::size_t b = 0; b < batch; ++b) rows[b] = static_cast<std::size_t>(rng.index(n));

        // Forward pass and per-row backward hooks: codes, reconstruction
        // error, residual norm, and the code gradients gf.
#pragma omp parallel
        {
            std::vector<double> f(ds);
            std::vector<std::size_t> scratch;
            scratch.reserve(ds);
#pragma omp for schedule(static)
            for (std::int64_t b = 0; b < static_cast<std::int64_t>(batch); ++b) {
                const std::size_t bb = static_cast<std::size_t>(b);
                const double* x = data.row(rows[bb]);
                double* xtb = xt.data() + bb * d;
                for (std::size_t i = 0; i < d; ++i) xtb[i] = x[i] - params.decoder_bias[i];
                // Four encoder rows per pass share the x loads and amortize
                // the reduction epilogue.
                std::size_t j = 0;
                for (; j + 4 <= ds; j += 4) {
                    const double* w0 = params.encoder_weight.row(j);
                    const double* w1 = params.encoder_weight.row(j + 1);
                    const double* w2 = params.encoder_weight.row(j + 2);
                    const double* w3 = params.encoder_weight.row(j + 3);
                    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
                    for (std::size_t i = 0; i < d; ++i) {
                        const double xv = xtb[i];
                        a0 += w0[i] * xv;
                        a1 += w1[i] * xv;
                        a2 += w2[i] * xv;
                        a3 += w3[i] * xv;
                    }
                    const double v0 = params.encoder_bias[j] + a0;
                    const double v1 = params.encoder_bias[j + 1] + a1;
                    const double v2 = params.encoder_bias[j + 2] + a2;
                    const double v3 = params.encoder_bias[j + 3] + a3;
                    f[j] = v0 > 0.0 ? v0 : 0.0;
                    f[j + 1] = v1 > 0.0 ? v1 : 0.0;
                    f[j + 2] = v2 > 0.0 ? v2 : 0.0;
                    f[j + 3] = v3 > 0.0 ? v3 : 0.0;
                }
                for (; j < ds; ++j) {
                    const double v = params.encoder_bias[j] + dot(params.encoder_weight.row(j), xtb, d);
                    f[j] = v > 0.0 ? v : 0.0;
                }
                select_topk_into(f, k, codes[bb], scratch);
                double* e = err.data() + bb * d;
                for (std::size_t i = 0; i < d; ++i) e[i] = params.decoder_bias[i] - x[i];
                for (std::size_t q = 0; q < codes[bb].nnz(); ++q) {
                    const double* dcol = dec_t.data() + codes[bb].indices[q] * d;
                    const double zv = codes[bb].values[q];
                    for (std::size_t i = 0; i < d; ++i) e[i] += zv * dcol[i];
                }
                row_residual[bb] = norm2(e, d);
                double* gf = gf_rows.data() + bb * k;
                for (std::size_t q = 0; q < codes[bb].nnz(); ++q) {
                    const double* dcol = dec_t.data() + codes[bb].indices[q] * d;
                    gf[q] = dot(dcol, e, d) * scale;
                }
            }
        }

        double batch_residual = 0.0;
        for (std::size_t b = 0; b < batch; ++b) batch_residual += row_residual[b];
        interval_residual += batch_residual / static_cast<double>(batch);
        ++interval_steps;

        // Gather per-feature row lists in fixed row order.
        for (auto& h : hits) h.clear();
        for (std::size_t b = 0; b < batch; ++b) {
            for (std::size_t q = 0; q < codes[b].nnz(); ++q) {
                hits[codes[b].indices[q]].push_back(Hit{b, q});
                ++activity[codes[b].indices[q]];
            }
        }

        // Parameter gradients. Each block reduces in fixed row order, so
        // results do not depend on the thread count.
        std::fill(g_we.begin(), g_we.end(), 0.0);
        std::fill(g_be.begin(), g_be.end(), 0.0);
        std::fill(g_wd.begin(), g_wd.end(), 0.0);
#pragma omp parallel for schedule(dynamic, 16)
        for (std::int64_t j = 0; j < static_cast<std::int64_t>(ds); ++j) {
            const std::size_t jj = static_cast<std::size_t>(j);
            double* gwe_row = g_we.data() + jj * d;
            double* gwd_row = g_wd.data() + jj * d;
            double gbe_acc = 0.0;
            for (const Hit& h : hits[jj]) {
                const double gf = gf_rows[h.row * k + h.slot];
                const double zv = codes[h.row].values[h.slot];
                const double* xtb = xt.data() + h.row * d;
                const double* e = err.data() + h.row * d;
                for (std::size_t i = 0; i < d; ++i) {
                    gwe_row[i] += gf * xtb[i];
                    gwd_row[i] += scale * zv * e[i];
                }
                gbe_acc += gf;
            }
            g_be[jj] = gbe_acc;
        }

        // Decoder-bias gradient: flows through the output and, negatively,
        // through the input shift.
#pragma omp parallel for schedule(static)
        for (std::int64_t b = 0; b < static_cast<std::int64_t>(batch); ++b) {
            const std::size_t bb = static_cast<std::size_t>(b);
            double* gx = gxt.data() + bb * d;
            std::fill(gx, gx + d, 0.0);
            for (std::size_t q = 0; q < codes[bb].nnz(); ++q) {
                const double gf = gf_rows[bb * k + q];
                const double* we_row = params.encoder_weight.row(codes[bb].indices[q]);
                for (std::size_t i = 0; i < d; ++i) gx[i] += gf * we_row[i];
            }
        }
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(d); ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            double acc = 0.0;
            for (std::size_t b = 0; b < batch; ++b) {
                acc += scale * err[b * d + ii] - gxt[b * d + ii];
            }
            g_bd[ii] = acc;
        }

        adam_we.step_begin();
        adam_be.step_begin();
        adam_wd.step_begin();
        adam_bd.step_begin();
        adam_we.update(params.encoder_weight.data().data(), g_we.data(), 0, ds * d);
        adam_be.update(params.encoder_bias.data(), g_be.data(), 0, ds);
        adam_wd.update(dec_t.data(), g_wd.data(), 0, ds * d);
        adam_bd.update(params.decoder_bias.data(), g_bd.data(), 0, d);

        if (config.decoder_renorm) {
#pragma omp parallel for schedule(static)
            for (std::int64_t j = 0; j < static_cast<std::int64_t>(ds); ++j) {
                double* dcol = dec_t.data() + static_cast<std::size_t>(j) * d;
                const double nrm = std::max(norm2(dcol, d), 1e-8);
                for (std::size_t i = 0; i < d; ++i) dcol[i] /= nrm;
            }
        }

        const bool at_boundary = (t % config.resample_period == 0);
        const bool final_step = (t == total_steps);
        if (at_boundary || final_step) {
            TrainingLogEntry entry;
            entry.step = t;
            entry.mean_residual = interval_residual / static_cast<double>(interval_steps);
            entry.dead_count = 0;
            for (std::size_t j = 0; j < ds; ++j) {
                if (activity[j] == 0) ++entry.dead_count;
            }
            if (at_boundary && static_cast<double>(t) < cutoff) {
                push_decoder();
                entry.resampled = resample_dead(params, data, activity, k, rng);
                pull_decoder();
                std::fill(activity.begin(), activity.end(), 0);
            }
            log.entries.push_back(entry);
            interval_residual = 0.0;
            interval_steps = 0;
        }
    }
    push_decoder();
    return {std::move(params), std::move(log)};
}

FeatureFilter filter_features(const SparseCodeMatrix& codes, double upper, double lower) {
    if (!(upper > lower)) throw BadThresholds("filter_features: upper must exceed lower");
    FeatureFilter filter;
    filter.activation_frequency.assign(codes.cols, 0.0);
    for (const auto& row : codes.entries) {
        for (std::size_t j : row.indices) filter.activation_frequency[j] += 1.0;
    }
    const double n = static_cast<double>(codes.rows);
    for (std::size_t j = 0; j < codes.cols; ++j) {
        filter.activation_frequency[j] /= n;
        const double freq = filter.activation_frequency[j];
        if (freq >= lower && freq <= upper) filter.kept.push_back(j);
    }
    return filter;
}

double residual_stats(const SaeParams& params, const Matrix& data, std::size_t k) {
    if (data.cols() != params.d_model()) throw DimMismatch("residual_stats: width != d_model");
    const std::size_t n = data.rows(), d = data.cols();
    std::vector<double> norms(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        std::vector<double> x(data.row(ii), data.row(ii) + d);
        const auto xhat = decode(params, encode_topk(params, x, k));
        double acc = 0.0;
        for (std::size_t l = 0; l < d; ++l) acc += (x[l] - xhat[l]) * (x[l] - xhat[l]);
        norms[ii] = std::sqrt(acc);
    }
    double acc = 0.0;
    for (double v : norms) acc += v;
    return acc / static_cast<double>(n);
}

MagnitudeStats magnitude_stats(const SparseCodeMatrix& codes, std::size_t k) {
    std::vector<double> values;
    const double scale = std::sqrt(static_cast<double>(k));
    for (const auto& row : codes.entries) {
        for (double v : row.values) values.push_back(v * scale);
    }
    if (values.empty()) throw AllZero("magnitude_stats: no nonzero entries");
    MagnitudeStats out;
    out.p5 = percentile(values, 5.0);
    out.p95 = percentile(values, 95.0);
    out.ratio = out.p95 / out.p5;
    return out;
}

IncoherenceStats incoherence_stats(const Matrix& dictionary) {
    const auto [mean_abs, max_abs] = column_coherence(dictionary);
    return {mean_abs, max_abs};
}

Matrix densify(const SparseCodeMatrix& codes, const std::vector<std::size_t>& kept) {
    std::vector<std::size_t> cols = kept;
    if (cols.empty()) {
        cols.resize(codes.cols);
        std::iota(cols.begin(), cols.end(), std::size_t{0});
    }
    std::vector<std::size_t> position(codes.cols, codes.cols);
    for (std::size_t p = 0; p < cols.size(); ++p) position[cols[p]] = p;
    Matrix out(codes.rows, cols.size());
    for (std::size_t i = 0; i < codes.rows; ++i) {
        const auto& row = codes.entries[i];
        for (std::size_t q = 0; q < row.nnz(); ++q) {
            const std::size_t p = position[row.indices[q]];
            if (p != codes.cols) out(i, p) = row.values[q];
        }
    }
    return out;
}

namespace {

void write_f32(std::FILE* fp, const std::vector<double>& values) {
    for (double v : values) {
        const float f = static_cast<float>(v);
        std::fwrite(&f, sizeof(float), 1, fp);
    }
}

std::vector<double> read_f32(std::FILE* fp, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        float f = 0.0f;
        if (std::fread(&f, sizeof(float), 1, fp) != 1) {
            throw TruncatedPayload("sae artifact: payload shorter than header promises");
        }
        out[i] = static_cast<double>(f);
    }
    return out;
}

}  // namespace

void save_sae(const std::string& path, const SaeParams& params, std::size_t k) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot open for writing: " + path);
    std::fwrite("SAE1", 1, 4, fp);
    const std::uint32_t header[3] = {static_cast<std::uint32_t>(params.d_model()),
                                     static_cast<std::uint32_t>(params.d_sparse()),
                                     static_cast<std::uint32_t>(k)};
    std::fwrite(header, sizeof(std::uint32_t), 3, fp);
    write_f32(fp, params.encoder_weight.data());
    write_f32(fp, params.encoder_bias);
    write_f32(fp, params.decoder_weight.data());
    write_f32(fp, params.decoder_bias);
    std::fclose(fp);
}

std::pair<SaeParams, std::size_t> load_sae(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IoError("cannot open: " + path);
    char magic[4] = {};
    if (std::fread(magic, 1, 4, fp) != 4 || std::memcmp(magic, "SAE1", 4) != 0) {
        std::fclose(fp);
        throw BadMagic("sae artifact: bad magic");
    }
    std::uint32_t header[3] = {};
    if (std::fread(header, sizeof(std::uint32_t), 3, fp) != 3) {
        std::fclose(fp);
        throw TruncatedPayload("sae artifact: missing header");
    }
    const std::size_t d = header[0], ds = header[1], k = header[2];
    try {
        SaeParams p;
        p.encoder_weight = Matrix(ds, d, read_f32(fp, ds * d));
        p.encoder_bias = read_f32(fp, ds);
        p.decoder_weight = Matrix(d, ds, read_f32(fp, d * ds));
        p.decoder_bias = read_f32(fp, d);
        std::fclose(fp);
        return {std::move(p), k};
    } catch (...) {
        std::fclose(fp);
        throw;
    }
}

}  // namespace ralab
