#include "ralab/statmodel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ralab/kernels.hpp"

namespace ralab {

void SyntheticConfig::validate() const {
    if (!(phi > 0.0 && phi <= Phi)) throw Error("synthetic config: need 0 < phi <= Phi");
    if (k > m) throw Error("synthetic config: k must be <= m");
    if (eps_noise_raw < 0.0) throw Error("synthetic config: eps_noise_raw must be >= 0");
    for (std::size_t t : overlap_schedule) {
        if (t > k) throw Error("synthetic config: overlap target exceeds k");
    }
    if (orthonormal_dictionary && m > d) {
        throw Error("synthetic config: orthonormal dictionary requires m <= d");
    }
}

DictionaryDraw generate_dictionary(std::size_t d, std::size_t m, Rng& rng, bool orthonormal) {
    if (m < 2) throw TooFewColumns("generate_dictionary: m must be >= 2");
    if (d < 1) throw Error("generate_dictionary: d must be >= 1");
    if (orthonormal && m > d) throw Infeasible("orthonormal dictionary requires m <= d");

    Matrix a(d, m);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t i = 0; i < d; ++i) a(i, j) = rng.normal();
    }
    if (orthonormal) {
        // Modified Gram-Schmidt over columns.
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t l = 0; l < j; ++l) {
                double proj = 0.0;
                for (std::size_t i = 0; i < d; ++i) proj += a(i, j) * a(i, l);
                for (std::size_t i = 0; i < d; ++i) a(i, j) -= proj * a(i, l);
            }
            double nrm = 0.0;
            for (std::size_t i = 0; i < d; ++i) nrm += a(i, j) * a(i, j);
            nrm = std::sqrt(nrm);
            if (nrm < 1e-12) throw DegenerateSignal("gram-schmidt hit a dependent column");
            for (std::size_t i = 0; i < d; ++i) a(i, j) /= nrm;
        }
    } else {
        for (std::size_t j = 0; j < m; ++j) {
            double nrm = 0.0;
            for (std::size_t i = 0; i < d; ++i) nrm += a(i, j) * a(i, j);
            nrm = std::sqrt(nrm);
            for (std::size_t i = 0; i < d; ++i) a(i, j) /= nrm;
        }
    }
    const auto [mean_abs, max_abs] = column_coherence(a);
    return {std::move(a), max_abs, mean_abs};
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> sample_support_pair(
    std::size_t m, std::size_t k, std::size_t t, Rng& rng) {
    if (t > k) throw Error("sample_support_pair: t must be <= k");
    if (2 * k - t > m) throw Infeasible("sample_support_pair: 2k - t exceeds m");

    const auto draw = rng.sample_without_replacement(m, 2 * k - t);
    std::vector<std::size_t> z1(draw.begin(), draw.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<std::size_t> z2(draw.begin(), draw.begin() + static_cast<std::ptrdiff_t>(t));
    z2.insert(z2.end(), draw.begin() + static_cast<std::ptrdiff_t>(k), draw.end());
    std::sort(z1.begin(), z1.end());
    std::sort(z2.begin(), z2.end());
    return {std::move(z1), std::move(z2)};
}

namespace {

std::vector<double> signal_vector(const Matrix& dictionary, const std::vector<std::size_t>& z,
                                  const std::vector<double>& mags) {
    const std::size_t d = dictionary.rows();
    std::vector<double> s(d, 0.0);
    for (std::size_t q = 0; q < z.size(); ++q) {
        for (std::size_t i = 0; i < d; ++i) s[i] += mags[q] * dictionary(i, z[q]);
    }
    return s;
}

std::vector<double> ball_noise(std::size_t d, double radius, Rng& rng) {
    std::vector<double> eta(d, 0.0);
    if (radius <= 0.0) return eta;
    double nrm = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        eta[i] = rng.normal();
        nrm += eta[i] * eta[i];
    }
    nrm = std::sqrt(nrm);
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    for (std::size_t i = 0; i < d; ++i) eta[i] = eta[i] / nrm * r;
    return eta;
}

}  // namespace

PairDraw synthesize_pair(const SyntheticConfig& config, const Matrix& dictionary,
                         const std::vector<std::size_t>& z1, const std::vector<std::size_t>& z2,
                         Rng& rng) {
    if (dictionary.rows() != config.d || dictionary.cols() != config.m) {
        throw DimMismatch("synthesize_pair: dictionary dimensions do not match config");
    }
    const std::size_t d = config.d, k = config.k;
    const double lo = config.phi / std::sqrt(static_cast<double>(k));
    const double hi = config.Phi / std::sqrt(static_cast<double>(k));

    PairDraw out;
    out.m1.resize(k);
    out.m2.resize(k);
    for (std::size_t q = 0; q < k; ++q) out.m1[q] = rng.uniform(lo, hi);
    for (std::size_t q = 0; q < k; ++q) out.m2[q] = rng.uniform(lo, hi);

    const auto build = [&](const std::vector<std::size_t>& z, const std::vector<double>& mags,
                           std::vector<double>& f, std::vector<double>& eta) {
        const auto s = signal_vector(dictionary, z, mags);
        const auto raw = ball_noise(d, config.eps_noise_raw, rng);
        std::vector<double> v(d);
        for (std::size_t i = 0; i < d; ++i) v[i] = s[i] + raw[i];
        const double nrm = norm2(v.data(), d);
        if (nrm < 1e-9) throw DegenerateSignal("synthesize_pair: signal plus noise is null");
        f.resize(d);
        eta.resize(d);
        for (std::size_t i = 0; i < d; ++i) {
            f[i] = v[i] / nrm;
            eta[i] = f[i] - s[i];
        }
    };
    build(z1, out.m1, out.f1, out.eta1);
    build(z2, out.m2, out.f2, out.eta2);
    return out;
}

SyntheticInstance build_instance(const SyntheticConfig& config) {
    config.validate();
    Rng rng(config.seed);

    SyntheticInstance inst;
    auto dict = generate_dictionary(config.d, config.m, rng, config.orthonormal_dictionary);
    inst.dictionary = std::move(dict.dictionary);
    inst.eps_dict_max = dict.eps_max;
    inst.eps_dict_mean = dict.eps_mean;
    inst.k = config.k;
    inst.phi = config.phi;
    inst.Phi = config.Phi;

    const std::size_t total_pairs = config.n_pairs * config.overlap_schedule.size();
    const std::size_t n = 2 * total_pairs;
    inst.representations = Matrix(n, config.d);
    inst.noise_effective = Matrix(n, config.d);
    inst.supports.resize(n);
    inst.magnitudes.resize(n);
    inst.pair_overlap.reserve(total_pairs);

    double max_noise = 0.0;
    std::size_t row = 0;
    for (std::size_t t : config.overlap_schedule) {
        for (std::size_t p = 0; p < config.n_pairs; ++p) {
            auto [z1, z2] = sample_support_pair(config.m, config.k, t, rng);
            auto pd = synthesize_pair(config, inst.dictionary, z1, z2, rng);
            for (std::size_t i = 0; i < config.d; ++i) {
                inst.representations(row, i) = pd.f1[i];
                inst.noise_effective(row, i) = pd.eta1[i];
                inst.representations(row + 1, i) = pd.f2[i];
                inst.noise_effective(row + 1, i) = pd.eta2[i];
            }
            max_noise = std::max(max_noise, norm2(pd.eta1.data(), config.d));
            max_noise = std::max(max_noise, norm2(pd.eta2.data(), config.d));
            inst.supports[row] = std::move(z1);
            inst.supports[row + 1] = std::move(z2);
            inst.magnitudes[row] = std::move(pd.m1);
            inst.magnitudes[row + 1] = std::move(pd.m2);
            inst.pair_overlap.push_back(t);
            row += 2;
        }
    }
    inst.eps_noise_effective = max_noise;
    return inst;
}

Decomposition decompose_inner_product(const SyntheticInstance& instance, std::size_t i,
                                      std::size_t j) {
    const std::size_t n = instance.representations.rows();
    if (i >= n || j >= n) throw IndexOutOfRange("decompose_inner_product: row out of range");
    if (i == j) throw Error("decompose_inner_product: need two distinct rows");

    const auto& zi = instance.supports[i];
    const auto& zj = instance.supports[j];
    const auto& mi = instance.magnitudes[i];
    const auto& mj = instance.magnitudes[j];
    const std::size_t d = instance.representations.cols();

    Decomposition out;
    for (std::size_t a = 0; a < zi.size(); ++a) {
        for (std::size_t b = 0; b < zj.size(); ++b) {
            if (zi[a] == zj[b]) {
                out.signal += mi[a] * mj[b];
                ++out.support_overlap;
            } else {
                double coh = 0.0;
                for (std::size_t l = 0; l < d; ++l) {
                    coh += instance.dictionary(l, zi[a]) * instance.dictionary(l, zj[b]);
                }
                out.bias += mi[a] * mj[b] * coh;
            }
        }
    }

    const double* fi = instance.representations.row(i);
    const double* fj = instance.representations.row(j);
    const double* ei = instance.noise_effective.row(i);
    const double* ej = instance.noise_effective.row(j);
    out.noise = dot(fi, ej, d) + dot(fj, ei, d) - dot(ei, ej, d);
    out.inner_product = dot(fi, fj, d);
    return out;
}

namespace {

constexpr double kFpSlack = 1e-9;

}

void check_bounds(const Decomposition& dec, const SyntheticInstance& inst, std::size_t pair_index,
                  BoundReport& report) {
    const double k = static_cast<double>(inst.k);
    const double t = static_cast<double>(dec.support_overlap);
    const double sig_lo = inst.phi * inst.phi * t / k;
    const double sig_hi = inst.Phi * inst.Phi * t / k;
    const double bias_cap = k * inst.eps_dict_max * inst.Phi * inst.Phi;
    const double noise_cap = 3.0 * inst.eps_noise_effective;

    const double slack_sig_lo = dec.signal - sig_lo;
    const double slack_sig_hi = sig_hi - dec.signal;
    const double slack_bias = bias_cap - std::fabs(dec.bias);
    const double slack_noise = noise_cap - std::fabs(dec.noise);
    const double additivity =
        std::fabs(dec.signal + dec.bias + dec.noise - dec.inner_product);

    auto note = [&](const char* which, double slack) {
        if (slack < -kFpSlack) report.violations.push_back({pair_index, which, slack});
    };
    note("signal_low", slack_sig_lo);
    note("signal_high", slack_sig_hi);
    note("bias", slack_bias);
    note("noise", slack_noise);
    if (additivity > kFpSlack) report.violations.push_back({pair_index, "additivity", -additivity});

    if (report.pairs_checked == 0) {
        report.min_slack_signal = std::min(slack_sig_lo, slack_sig_hi);
        report.min_slack_bias = slack_bias;
        report.min_slack_noise = slack_noise;
        report.max_additivity_error = additivity;
    } else {
        report.min_slack_signal =
            std::min({report.min_slack_signal, slack_sig_lo, slack_sig_hi});
        report.min_slack_bias = std::min(report.min_slack_bias, slack_bias);
        report.min_slack_noise = std::min(report.min_slack_noise, slack_noise);
        report.max_additivity_error = std::max(report.max_additivity_error, additivity);
    }
    ++report.pairs_checked;
}

BoundReport check_all_bounds(const SyntheticInstance& instance) {
    BoundReport report;
    for (std::size_t p = 0; p < instance.n_pairs(); ++p) {
        const auto dec = decompose_inner_product(instance, 2 * p, 2 * p + 1);
        check_bounds(dec, instance, p, report);
    }
    return report;
}

Prop1Report verify_prop1(const SyntheticInstance& instance, double gamma) {
    if (gamma <= 0.0) throw Error("verify_prop1: gamma must be > 0");

    Prop1Report report;
    report.gamma = gamma;
    const double k = static_cast<double>(instance.k);
    const double phi2 = instance.phi * instance.phi;
    const double Phi2 = instance.Phi * instance.Phi;
    const double bias_noise = k * instance.eps_dict_max * Phi2 + 3.0 * instance.eps_noise_effective;
    report.precondition_value = bias_noise;
    report.precondition_met = bias_noise <= 1.0;
    report.pairs = instance.n_pairs();

    const double part1_threshold = (2.0 * k / phi2) * (bias_noise + gamma / 2.0);
    const double part1_bound = bias_noise + gamma;
    const double part2_threshold = bias_noise + gamma;
    const double part2_bound = k * gamma / Phi2;

    for (std::size_t p = 0; p < instance.n_pairs(); ++p) {
        const auto dec = decompose_inner_product(instance, 2 * p, 2 * p + 1);
        const double zz = static_cast<double>(dec.support_overlap);
        if (zz >= part1_threshold) {
            ++report.part1_antecedents;
            if (!(dec.inner_product >= part1_bound - kFpSlack)) ++report.part1_failures;
        }
        if (dec.inner_product >= part2_threshold) {
            ++report.part2_antecedents;
            if (!(zz >= part2_bound - kFpSlack)) ++report.part2_failures;
        }
    }
    return report;
}

}  // namespace ralab
