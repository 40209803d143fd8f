#include "ralab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "ralab/kernels.hpp"
#include "ralab/stats.hpp"
#include "ralab/svd.hpp"

namespace ralab {

namespace {

Matrix column_center(const Matrix& m) {
    const auto mu = column_mean(m);
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) - mu[j];
    }
    return out;
}

double frobenius(const Matrix& m) {
    double acc = 0.0;
    for (double x : m.data()) acc += x * x;
    return std::sqrt(acc);
}

void require_same_rows(const Matrix& f, const Matrix& g) {
    if (f.rows() != g.rows()) throw RowCountMismatch("representations have different row counts");
}

}  // namespace

MetricId MetricId::parse(const std::string& text) {
    std::string base = text;
    std::size_t param = 0;
    if (auto pos = text.find(':'); pos != std::string::npos) {
        base = text.substr(0, pos);
        param = static_cast<std::size_t>(std::stoul(text.substr(pos + 1)));
    }
    if (base == "cka") return cka();
    if (base == "cka_unbiased") return cka_unbiased();
    if (base == "svcca") return svcca(param ? param : 10);
    if (base == "knn_overlap") return knn_overlap(param ? param : 10);
    if (base == "knn_edit") return knn_edit(param ? param : 10);
    throw Error("unknown metric: " + text);
}

std::string MetricId::name() const {
    switch (kind) {
        case Kind::cka: return "cka";
        case Kind::cka_unbiased: return "cka_unbiased";
        case Kind::svcca: return "svcca:" + std::to_string(param);
        case Kind::knn_overlap: return "knn_overlap:" + std::to_string(param);
        case Kind::knn_edit: return "knn_edit:" + std::to_string(param);
    }
    return "?";
}

double linear_cka(const Matrix& f, const Matrix& g) {
    require_same_rows(f, g);
    if (f.rows() < 2) throw TooFewSamples("linear_cka needs N >= 2");
    const Matrix fc = column_center(f);
    const Matrix gc = column_center(g);
    const double cross = frobenius(matmul_at_b(gc, fc));
    const double nf = frobenius(matmul_at_b(fc, fc));
    const double ng = frobenius(matmul_at_b(gc, gc));
    if (nf == 0.0 || ng == 0.0) return 0.0;
    return cross * cross / (nf * ng);
}

double unbiased_cka(const Matrix& f, const Matrix& g) {
    require_same_rows(f, g);
    const std::size_t n = f.rows();
    if (n < 4) throw TooFewSamples("unbiased_cka needs N >= 4");

    Matrix k = gram(f);
    Matrix l = gram(g);
    for (std::size_t i = 0; i < n; ++i) {
        k(i, i) = 0.0;
        l(i, i) = 0.0;
    }

    const double nd = static_cast<double>(n);
    auto hsic1 = [&](const Matrix& a, const Matrix& b) {
        double tr = 0.0;
        std::vector<double> rs_a(n, 0.0), rs_b(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                tr += a(i, j) * b(j, i);
                rs_a[i] += a(i, j);
                rs_b[i] += b(i, j);
            }
        }
        double sum_a = 0.0, sum_b = 0.0, cross = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum_a += rs_a[i];
            sum_b += rs_b[i];
            cross += rs_a[i] * rs_b[i];  // 1^T a b 1 (a, b symmetric)
        }
        return (tr + sum_a * sum_b / ((nd - 1.0) * (nd - 2.0)) - 2.0 / (nd - 2.0) * cross) /
               (nd * (nd - 3.0));
    };

    const double kl = hsic1(k, l);
    const double kk = hsic1(k, k);
    const double ll = hsic1(l, l);
    const double denom = std::sqrt(std::max(kk * ll, 0.0));
    if (denom == 0.0) return 0.0;
    return kl / denom;
}

double svcca(const Matrix& f, const Matrix& g, std::size_t c) {
    require_same_rows(f, g);
    const std::size_t n = f.rows();
    if (c < 1) throw Error("svcca requires c >= 1");
    if (n <= c) throw TooFewSamples("svcca needs N > c");
    if (c > std::min(f.cols(), g.cols())) throw RankDeficient("svcca: c exceeds feature dimension");

    auto project = [&](const Matrix& m) {
        const Svd dec = svd(column_center(m));
        const double smax = dec.s.empty() ? 0.0 : dec.s[0];
        std::size_t nonzero = 0;
        for (double s : dec.s) {
            if (s > smax * 1e-10 && s > 0.0) ++nonzero;
        }
        if (nonzero < c) throw RankDeficient("svcca: fewer than c nonzero singular values");
        Matrix proj(n, c);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) proj(i, j) = dec.u(i, j) * dec.s[j];
        }
        return proj;
    };

    const Matrix pf = project(f);
    const Matrix pg = project(g);

    // CCA via whitening: orthonormal bases from the SVDs of the two
    // projections, then singular values of Qf^T Qg are the canonical
    // correlations.
    const Svd df = svd(pf);
    const Svd dg = svd(pg);
    Matrix qf(n, c), qg(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            qf(i, j) = df.u(i, j);
            qg(i, j) = dg.u(i, j);
        }
    }
    const Svd cross = svd(matmul_at_b(qf, qg));
    double acc = 0.0;
    for (std::size_t j = 0; j < c; ++j) acc += std::clamp(cross.s[j], 0.0, 1.0);
    return acc / static_cast<double>(c);
}

std::vector<std::vector<std::size_t>> knn_indices(const Matrix& gramian, std::size_t k) {
    if (gramian.rows() != gramian.cols()) throw NotSquare("knn_indices: gramian not square");
    const std::size_t n = gramian.rows();
    if (k + 1 > n) throw KTooLarge("knn_indices: k must be <= N-1");

    std::vector<std::vector<std::size_t>> out(n);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        std::vector<std::size_t> idx;
        idx.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j) {
            if (j != ii) idx.push_back(j);
        }
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                          [&](std::size_t a, std::size_t b) {
                              const double sa = gramian(ii, a), sb = gramian(ii, b);
                              if (sa != sb) return sa > sb;
                              return a < b;
                          });
        idx.resize(k);
        out[ii] = std::move(idx);
    }
    return out;
}

namespace {

std::size_t levenshtein(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    const std::size_t m = a.size(), n = b.size();
    std::vector<std::size_t> prev(n + 1), cur(n + 1);
    for (std::size_t j = 0; j <= n; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= m; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= n; ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

}  // namespace

double mutual_knn_overlap(const Matrix& f, const Matrix& g, std::size_t k) {
    require_same_rows(f, g);
    const auto nf = knn_indices(gram(f), k);
    const auto ng = knn_indices(gram(g), k);
    const std::size_t n = nf.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::set<std::size_t> sf(nf[i].begin(), nf[i].end());
        std::size_t shared = 0;
        for (std::size_t j : ng[i]) shared += sf.count(j);
        acc += static_cast<double>(shared) / static_cast<double>(k);
    }
    return acc / static_cast<double>(n);
}

double knn_edit_distance(const Matrix& f, const Matrix& g, std::size_t k) {
    require_same_rows(f, g);
    const auto nf = knn_indices(gram(f), k);
    const auto ng = knn_indices(gram(g), k);
    double acc = 0.0;
    for (std::size_t i = 0; i < nf.size(); ++i) {
        acc += static_cast<double>(levenshtein(nf[i], ng[i])) / static_cast<double>(k);
    }
    return acc / static_cast<double>(nf.size());
}

double evaluate_metric(const MetricId& id, const Matrix& f, const Matrix& g) {
    switch (id.kind) {
        case MetricId::Kind::cka: return linear_cka(f, g);
        case MetricId::Kind::cka_unbiased: return unbiased_cka(f, g);
        case MetricId::Kind::svcca: return svcca(f, g, id.param);
        case MetricId::Kind::knn_overlap: return mutual_knn_overlap(f, g, id.param);
        case MetricId::Kind::knn_edit: return knn_edit_distance(f, g, id.param);
    }
    throw Error("unreachable metric kind");
}

AlignmentReport subsampled_alignment(const Matrix& f, const Matrix& g, const MetricId& metric,
                                     std::size_t sample_size, std::size_t n_samples, Rng& rng) {
    require_same_rows(f, g);
    if (sample_size > f.rows()) throw SampleTooLarge("sample_size exceeds row count");
    if (n_samples < 1) throw Error("n_samples must be >= 1");

    const std::uint64_t seed_before = rng.state();
    AlignmentReport report;
    report.metric = metric;
    report.n_points = sample_size;
    report.seed = seed_before;

    // Draw all subsets sequentially first; evaluation order is then free.
    std::vector<std::vector<std::size_t>> subsets;
    subsets.reserve(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) {
        subsets.push_back(rng.sample_without_replacement(f.rows(), sample_size));
    }

    report.values.resize(n_samples);
    for (std::size_t s = 0; s < n_samples; ++s) {
        Matrix fs(sample_size, f.cols()), gs(sample_size, g.cols());
        for (std::size_t i = 0; i < sample_size; ++i) {
            const std::size_t src = subsets[s][i];
            for (std::size_t j = 0; j < f.cols(); ++j) fs(i, j) = f(src, j);
            for (std::size_t j = 0; j < g.cols(); ++j) gs(i, j) = g(src, j);
        }
        report.values[s] = evaluate_metric(metric, fs, gs);
    }
    report.mean = mean(report.values);
    report.std = population_std(report.values);
    return report;
}

}  // namespace ralab
