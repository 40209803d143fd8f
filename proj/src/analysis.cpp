#include "ralab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ralab/kernels.hpp"

namespace ralab {

Modality parse_modality(const std::string& text) {
    if (text == "llm") return Modality::llm;
    if (text == "text_emb") return Modality::text_emb;
    if (text == "mm_text") return Modality::mm_text;
    if (text == "mm_image") return Modality::mm_image;
    if (text == "image_foundation") return Modality::image_foundation;
    throw Error("unknown modality: " + text);
}

std::string modality_name(Modality m) {
    switch (m) {
        case Modality::llm: return "llm";
        case Modality::text_emb: return "text_emb";
        case Modality::mm_text: return "mm_text";
        case Modality::mm_image: return "mm_image";
        case Modality::image_foundation: return "image_foundation";
    }
    return "?";
}

bool is_text_side(Modality m) {
    return m == Modality::llm || m == Modality::text_emb || m == Modality::mm_text;
}

Matrix debias(const Matrix& f) {
    if (f.rows() < 2) throw TooFewSamples("debias needs N >= 2");
    const auto mu = column_mean(f);
    Matrix centered(f.rows(), f.cols());
    for (std::size_t i = 0; i < f.rows(); ++i) {
        for (std::size_t j = 0; j < f.cols(); ++j) centered(i, j) = f(i, j) - mu[j];
    }
    return unit_normalize_rows(centered);
}

OlsFit ols_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimMismatch("ols_fit: length mismatch");
    if (x.size() < 2) throw Error("ols_fit: need at least 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx < 1e-300) throw ConstantX("ols_fit: x has no variance");

    OlsFit fit;
    if (syy == 0.0) {
        fit.slope = 0.0;
        fit.intercept = my;
        fit.r_squared = 0.0;
        fit.zero_variance_y = true;
        return fit;
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (fit.slope * x[i] + fit.intercept);
        ss_res += e * e;
    }
    fit.r_squared = 1.0 - ss_res / syy;
    return fit;
}

TrendReport sliding_window_trend(const Matrix& f, const Matrix& g,
                                 const std::vector<double>& frequencies, std::size_t window,
                                 std::size_t step, const MetricId& metric) {
    if (f.rows() != g.rows()) throw RowCountMismatch("sliding_window_trend: row counts differ");
    if (frequencies.size() != f.rows()) {
        throw DimMismatch("sliding_window_trend: one frequency per row required");
    }
    if (window > f.rows()) throw WindowTooLarge("sliding_window_trend: window exceeds N");
    if (window < 2 || step < 1) throw Error("sliding_window_trend: window >= 2, step >= 1");
    for (double fr : frequencies) {
        if (!(fr > 0.0)) throw Error("sliding_window_trend: frequencies must be positive");
    }

    // Descending frequency, ties by original index.
    const std::size_t n = f.rows();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return frequencies[a] > frequencies[b];
    });

    TrendReport report;
    for (std::size_t start = 0; start + window <= n; start += step) {
        Matrix fs(window, f.cols()), gs(window, g.cols());
        double mean_invsqrt = 0.0;
        for (std::size_t i = 0; i < window; ++i) {
            const std::size_t src = order[start + i];
            for (std::size_t j = 0; j < f.cols(); ++j) fs(i, j) = f(src, j);
            for (std::size_t j = 0; j < g.cols(); ++j) gs(i, j) = g(src, j);
            mean_invsqrt += 1.0 / std::sqrt(frequencies[src]);
        }
        report.window_centers.push_back(mean_invsqrt / static_cast<double>(window));
        report.alignments.push_back(evaluate_metric(metric, fs, gs));
    }

    if (report.window_centers.size() < 2) {
        report.single_window = true;
        return report;
    }
    const OlsFit fit = ols_fit(report.window_centers, report.alignments);
    report.slope = fit.slope;
    report.intercept = fit.intercept;
    report.r_squared = fit.r_squared;
    report.zero_variance = fit.zero_variance_y;
    return report;
}

SpecFeatureMatrix build_spec_features(const std::vector<ModelSpec>& specs) {
    if (specs.size() < 2) throw TooFewModels("build_spec_features: need at least 2 models");

    SpecFeatureMatrix out;
    out.feature_names = {"min_log_params", "max_log_params", "min_depth",      "max_depth",
                         "min_log_width",  "max_log_width",  "min_log_images", "max_log_images",
                         "min_log_tokens", "max_log_tokens", "min_year",       "max_year",
                         "text_text",      "text_img",       "img_img"};

    const std::size_t n = specs.size();
    const std::size_t pairs = n * (n - 1) / 2;
    out.features = Matrix(pairs, 15);
    out.pair_index.reserve(pairs);

    // Zero counts appear in the spec tables (image-only models train on no
    // text tokens), so token/image counts go through log10(x + 1).
    const auto log1p10 = [](double x) { return std::log10(x + 1.0); };

    std::size_t row = 0;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b, ++row) {
            const ModelSpec& sa = specs[a];
            const ModelSpec& sb = specs[b];
            out.pair_index.emplace_back(sa.name, sb.name);

            const double lpa = std::log10(sa.params_count), lpb = std::log10(sb.params_count);
            const double lwa = std::log10(sa.width), lwb = std::log10(sb.width);
            const double lia = log1p10(sa.image_tokens), lib = log1p10(sb.image_tokens);
            const double lta = log1p10(sa.text_tokens), ltb = log1p10(sb.text_tokens);

            out.features(row, 0) = std::min(lpa, lpb);
            out.features(row, 1) = std::max(lpa, lpb);
            out.features(row, 2) = std::min(sa.depth, sb.depth);
            out.features(row, 3) = std::max(sa.depth, sb.depth);
            out.features(row, 4) = std::min(lwa, lwb);
            out.features(row, 5) = std::max(lwa, lwb);
            out.features(row, 6) = std::min(lia, lib);
            out.features(row, 7) = std::max(lia, lib);
            out.features(row, 8) = std::min(lta, ltb);
            out.features(row, 9) = std::max(lta, ltb);
            out.features(row, 10) = std::min(sa.year, sb.year);
            out.features(row, 11) = std::max(sa.year, sb.year);

            const bool ta = is_text_side(sa.modality);
            const bool tb = is_text_side(sb.modality);
            out.features(row, 12) = (ta && tb) ? 1.0 : 0.0;
            out.features(row, 13) = (ta != tb) ? 1.0 : 0.0;
            out.features(row, 14) = (!ta && !tb) ? 1.0 : 0.0;
        }
    }

    // Center and scale each column to unit norm; a column with no variance
    // is left at zero.
    for (std::size_t j = 0; j < 15; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < pairs; ++i) mu += out.features(i, j);
        mu /= static_cast<double>(pairs);
        double nrm = 0.0;
        for (std::size_t i = 0; i < pairs; ++i) {
            out.features(i, j) -= mu;
            nrm += out.features(i, j) * out.features(i, j);
        }
        nrm = std::sqrt(nrm);
        if (nrm > 1e-12) {
            for (std::size_t i = 0; i < pairs; ++i) out.features(i, j) /= nrm;
        }
    }
    return out;
}

std::vector<double> ridge_fit(const Matrix& x, const std::vector<double>& y, double lambda) {
    if (x.rows() != y.size()) throw DimMismatch("ridge_fit: row count != y length");
    if (x.rows() < 1) throw Error("ridge_fit: need at least one row");
    if (lambda < 0.0) throw Error("ridge_fit: lambda must be >= 0");

    const std::size_t q = x.cols();
    Matrix a = matmul_at_b(x, x);
    for (std::size_t i = 0; i < q; ++i) a(i, i) += lambda;

    std::vector<double> rhs(q, 0.0);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < q; ++j) rhs[j] += x(i, j) * y[i];
    }

    // Cholesky with a singularity guard; A is symmetric positive
    // semdefinite, and lambda > 0 makes it definite.
    Matrix l(q, q);
    double scale = 0.0;
    for (std::size_t i = 0; i < q; ++i) scale = std::max(scale, std::fabs(a(i, i)));
    const double tol = std::max(scale, 1.0) * 1e-13;
    for (std::size_t j = 0; j < q; ++j) {
        double diag = a(j, j);
        for (std::size_t l2 = 0; l2 < j; ++l2) diag -= l(j, l2) * l(j, l2);
        if (diag <= tol) throw Singular("ridge_fit: X^T X + lambda I is singular");
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < q; ++i) {
            double v = a(i, j);
            for (std::size_t l2 = 0; l2 < j; ++l2) v -= l(i, l2) * l(j, l2);
            l(i, j) = v / l(j, j);
        }
    }
    // Forward then backward substitution.
    std::vector<double> z(q, 0.0), beta(q, 0.0);
    for (std::size_t i = 0; i < q; ++i) {
        double v = rhs[i];
        for (std::size_t j = 0; j < i; ++j) v -= l(i, j) * z[j];
        z[i] = v / l(i, i);
    }
    for (std::size_t ir = q; ir > 0; --ir) {
        const std::size_t i = ir - 1;
        double v = z[i];
        for (std::size_t j = i + 1; j < q; ++j) v -= l(j, i) * beta[j];
        beta[i] = v / l(i, i);
    }
    return beta;
}

}  // namespace ralab
