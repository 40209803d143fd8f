#pragma once

#include <string>
#include <vector>

#include "ralab/matrix.hpp"
#include "ralab/metrics.hpp"

namespace ralab {

enum class Modality { llm, text_emb, mm_text, mm_image, image_foundation };

Modality parse_modality(const std::string& text);
std::string modality_name(Modality m);

/// True when the model represents captions/words rather than pixels.
bool is_text_side(Modality m);

struct ModelSpec {
    std::string name;
    double params_count = 0.0;  // raw parameter count
    double depth = 0.0;
    double width = 0.0;
    double text_tokens = 0.0;
    double image_tokens = 0.0;
    Modality modality = Modality::llm;
    int year = 0;
};

struct SpecFeatureMatrix {
    std::vector<std::pair<std::string, std::string>> pair_index;
    Matrix features;  // P x 15, columns centered and unit-normalized
    std::vector<std::string> feature_names;
};

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    bool zero_variance_y = false;
};

struct TrendReport {
    std::vector<double> window_centers;  // mean f^(-1/2) per window
    std::vector<double> alignments;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    bool single_window = false;
    bool zero_variance = false;
};

/// Subtract the column mean from every row, then renormalize rows to unit
/// norm. Throws ZeroRow if a centered row is numerically zero.
Matrix debias(const Matrix& f);

/// Ordinary least squares of y on x. Throws ConstantX when x has no
/// variance; a constant y gives slope 0 and r_squared 0 with the flag set.
OlsFit ols_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Sort rows by descending frequency, slide a fixed window, compute the
/// metric per window slice and regress alignment on the window mean of
/// f^(-1/2). A single window skips the regression and sets the flag.
TrendReport sliding_window_trend(const Matrix& f, const Matrix& g,
                                 const std::vector<double>& frequencies, std::size_t window,
                                 std::size_t step, const MetricId& metric);

/// The 15 pair features: min/max of log10 params, raw depth, log10 width,
/// log10 (training images + 1), log10 (training tokens + 1), raw year,
/// plus the three modality-pair indicators; each column centered and
/// scaled to unit norm.
SpecFeatureMatrix build_spec_features(const std::vector<ModelSpec>& specs);

/// Ridge regression coefficients (X^T X + lambda I)^-1 X^T y via a
/// Cholesky solve. lambda = 0 requires X^T X to be nonsingular.
std::vector<double> ridge_fit(const Matrix& x, const std::vector<double>& y, double lambda);

}  // namespace ralab
