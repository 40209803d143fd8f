// ralab: batch experiment driver for representation-alignment studies.
// Subcommands: align, sae train, sae encode, match, freq-trend,
// spec-regress, incoherence, synth certify.
//
// Exit codes: 0 success, 1 input or usage error, 2 certification failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ralab/analysis.hpp"
#include "ralab/io.hpp"
#include "ralab/kernels.hpp"
#include "ralab/matching.hpp"
#include "ralab/metrics.hpp"
#include "ralab/sae.hpp"
#include "ralab/statmodel.hpp"
#include "ralab/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ralab;

namespace {

struct CommonOpts {
    std::string manifest_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
};

json repro_block(std::uint64_t seed, const std::string& canonical_config) {
    return json{{"seed", seed},
                {"config_hash", config_hash(canonical_config)},
                {"artifact_version", kArtifactVersion}};
}

void ensure_out_dir(const std::string& dir) {
    if (!dir.empty()) fs::create_directories(dir);
}

std::string out_path(const CommonOpts& opts, const std::string& name) {
    return (fs::path(opts.out_dir) / name).string();
}

Matrix apply_subset(const Manifest& man, Matrix m) {
    if (!man.row_subset_path) return m;
    return select_rows(m, load_row_subset(*man.row_subset_path));
}

Matrix load_variant(const Manifest& man, const ManifestModel& model, const std::string& variant) {
    Matrix m = apply_subset(man, load_embeddings(model.embedding_path).rows);
    if (variant == "raw") return m;
    if (variant == "debiased") return debias(m);
    if (variant == "sparse") {
        if (!model.sae_path) throw MissingSae("model " + model.name + " has no sae_path");
        const auto [params, k] = load_sae(*model.sae_path);
        const auto codes = encode_matrix(params, m, model.sae_k ? model.sae_k : k);
        const auto filter = filter_features(codes, 0.1, 0.00001);
        return densify(codes, filter.kept);
    }
    throw Error("unknown variant: " + variant);
}

std::vector<MetricId> parse_metrics(const std::vector<std::string>& names) {
    std::vector<MetricId> metrics;
    if (names.empty()) {
        metrics.push_back(MetricId::knn_overlap(10));
        return metrics;
    }
    metrics.reserve(names.size());
    for (const auto& n : names) metrics.push_back(MetricId::parse(n));
    return metrics;
}

// ---------------------------------------------------------------- align --

int run_align(const CommonOpts& opts, const std::vector<std::string>& metric_names,
              std::size_t sample_size, std::size_t n_samples, const std::string& variant) {
    const Manifest man = load_manifest(opts.manifest_path);
    const auto metrics = parse_metrics(metric_names);

    std::ostringstream canon;
    canon << "align;variant=" << variant << ";sample=" << sample_size << ";n=" << n_samples;
    for (const auto& m : metrics) canon << ";" << m.name();

    std::vector<Matrix> mats;
    mats.reserve(man.models.size());
    for (const auto& model : man.models) mats.push_back(load_variant(man, model, variant));

    ensure_out_dir(opts.out_dir);
    CsvWriter long_csv(out_path(opts, "align.csv"));
    long_csv.row({"model_a", "model_b", "metric", "sample", "value"});
    CsvWriter summary_csv(out_path(opts, "align_summary.csv"));
    summary_csv.row({"model_a", "model_b", "metric", "mean", "std", "n_points", "seed"});

    json jpairs = json::array();
    Rng rng(opts.seed);
    for (std::size_t a = 0; a < man.models.size(); ++a) {
        for (std::size_t b = a + 1; b < man.models.size(); ++b) {
            for (const auto& metric : metrics) {
                const std::size_t n_rows = std::min(mats[a].rows(), mats[b].rows());
                if (mats[a].rows() != mats[b].rows()) {
                    throw RowCountMismatch("models " + man.models[a].name + " and " +
                                           man.models[b].name + " embed different row counts");
                }
                const std::size_t eff_sample = std::min(sample_size, n_rows);
                const auto report =
                    subsampled_alignment(mats[a], mats[b], metric, eff_sample, n_samples, rng);
                for (std::size_t s = 0; s < report.values.size(); ++s) {
                    long_csv.row({man.models[a].name, man.models[b].name, metric.name(),
                                  std::to_string(s), format_double(report.values[s])});
                }
                summary_csv.row({man.models[a].name, man.models[b].name, metric.name(),
                                 format_double(report.mean), format_double(report.std),
                                 std::to_string(report.n_points), std::to_string(opts.seed)});
                jpairs.push_back(json{{"model_a", man.models[a].name},
                                      {"model_b", man.models[b].name},
                                      {"metric", metric.name()},
                                      {"values", report.values},
                                      {"mean", report.mean},
                                      {"std", report.std},
                                      {"n_points", report.n_points}});
            }
        }
    }
    json out{{"reproducibility", repro_block(opts.seed, canon.str())},
             {"dataset", man.dataset_name},
             {"variant", variant},
             {"pairs", jpairs}};
    write_text_file(out_path(opts, "align.json"), out.dump(2) + "\n");
    return 0;
}

// ------------------------------------------------------------- sae train --

int run_sae_train(const CommonOpts& opts, const std::vector<std::string>& only_models,
                  std::size_t d_sparse, std::optional<std::size_t> k_override,
                  std::optional<std::size_t> steps, std::optional<std::size_t> batch,
                  std::optional<double> lr) {
    const Manifest man = load_manifest(opts.manifest_path);
    ensure_out_dir(opts.out_dir);

    for (const auto& model : man.models) {
        if (!only_models.empty() &&
            std::find(only_models.begin(), only_models.end(), model.name) == only_models.end()) {
            continue;
        }
        const Matrix data = apply_subset(man, load_embeddings(model.embedding_path).rows);

        SaeConfig config;
        config.d_model = data.cols();
        config.d_sparse = d_sparse;
        config.k = k_override.value_or(model.sae_k);
        if (steps) config.steps = *steps;
        if (batch) config.batch_size = *batch;
        if (lr) config.learning_rate = *lr;
        config.batch_size = std::min(config.batch_size, data.rows());
        config.seed = opts.seed;

        auto [params, log] = sae_train(config, data);
        const std::string artifact = out_path(opts, model.name + ".sae");
        save_sae(artifact, params, config.k);

        CsvWriter log_csv(out_path(opts, model.name + "_train_log.csv"));
        log_csv.row({"step", "mean_residual", "dead_count", "resampled"});
        for (const auto& e : log.entries) {
            log_csv.row({std::to_string(e.step), format_double(e.mean_residual),
                         std::to_string(e.dead_count), std::to_string(e.resampled)});
        }

        std::ostringstream canon;
        canon << "sae-train;" << model.name << ";D=" << config.d_sparse << ";k=" << config.k
              << ";steps=" << config.steps << ";lr=" << config.learning_rate;
        json out{{"reproducibility", repro_block(opts.seed, canon.str())},
                 {"model", model.name},
                 {"artifact", artifact},
                 {"d_model", config.d_model},
                 {"d_sparse", config.d_sparse},
                 {"k", config.k},
                 {"steps", config.steps},
                 {"final_mean_residual",
                  log.entries.empty() ? 0.0 : log.entries.back().mean_residual},
                 {"final_dead_count",
                  log.entries.empty() ? 0 : log.entries.back().dead_count}};
        write_text_file(out_path(opts, model.name + "_train.json"), out.dump(2) + "\n");
        std::printf("trained %s: residual %s\n", model.name.c_str(),
                    log.entries.empty() ? "n/a"
                                        : format_double(log.entries.back().mean_residual).c_str());
    }
    return 0;
}

// ------------------------------------------------------------ sae encode --

int run_sae_encode(const CommonOpts& opts, const std::string& model_name,
                   const std::string& sae_path) {
    const Manifest man = load_manifest(opts.manifest_path);
    const auto it = std::find_if(man.models.begin(), man.models.end(),
                                 [&](const ManifestModel& m) { return m.name == model_name; });
    if (it == man.models.end()) throw Error("model not in manifest: " + model_name);

    std::string artifact = sae_path;
    if (artifact.empty()) {
        if (!it->sae_path) throw MissingSae("model " + model_name + " has no sae_path");
        artifact = *it->sae_path;
    }
    const auto [params, k_stored] = load_sae(artifact);
    const std::size_t k = it->sae_k ? it->sae_k : k_stored;
    const Matrix data = apply_subset(man, load_embeddings(it->embedding_path).rows);
    const auto codes = encode_matrix(params, data, k);

    ensure_out_dir(opts.out_dir);
    CsvWriter csv(out_path(opts, model_name + "_codes.csv"));
    csv.row({"row", "feature", "value"});
    for (std::size_t i = 0; i < codes.rows; ++i) {
        for (std::size_t q = 0; q < codes.entries[i].nnz(); ++q) {
            csv.row({std::to_string(i), std::to_string(codes.entries[i].indices[q]),
                     format_double(codes.entries[i].values[q])});
        }
    }
    const auto stats = magnitude_stats(codes, k);
    json out{{"reproducibility", repro_block(opts.seed, "sae-encode;" + model_name)},
             {"model", model_name},
             {"rows", codes.rows},
             {"d_sparse", codes.cols},
             {"k", k},
             {"magnitude_p5", stats.p5},
             {"magnitude_p95", stats.p95},
             {"magnitude_ratio", stats.ratio}};
    write_text_file(out_path(opts, model_name + "_codes.json"), out.dump(2) + "\n");
    return 0;
}

// ----------------------------------------------------------------- match --

int run_match(const CommonOpts& opts, const std::string& model_a, const std::string& model_b,
              std::size_t n_draws, bool kept_only, bool verbose) {
    const Manifest man = load_manifest(opts.manifest_path);
    const auto find = [&](const std::string& name) -> const ManifestModel& {
        const auto it = std::find_if(man.models.begin(), man.models.end(),
                                     [&](const ManifestModel& m) { return m.name == name; });
        if (it == man.models.end()) throw Error("model not in manifest: " + name);
        return *it;
    };
    const auto& ma = find(model_a);
    const auto& mb = find(model_b);

    const auto codes_for = [&](const ManifestModel& m) {
        if (!m.sae_path) throw MissingSae("model " + m.name + " has no sae_path");
        const auto [params, k_stored] = load_sae(*m.sae_path);
        const Matrix data = apply_subset(man, load_embeddings(m.embedding_path).rows);
        auto codes = encode_matrix(params, data, m.sae_k ? m.sae_k : k_stored);
        if (kept_only) {
            const auto filter = filter_features(codes, 0.1, 0.00001);
            const Matrix dense = densify(codes, filter.kept);
            SparseCodeMatrix truncated;
            truncated.rows = dense.rows();
            truncated.cols = dense.cols();
            truncated.entries.resize(dense.rows());
            for (std::size_t i = 0; i < dense.rows(); ++i) {
                for (std::size_t j = 0; j < dense.cols(); ++j) {
                    if (dense(i, j) > 0.0) {
                        truncated.entries[i].indices.push_back(j);
                        truncated.entries[i].values.push_back(dense(i, j));
                    }
                }
            }
            return truncated;
        }
        return codes;
    };

    const auto za = codes_for(ma);
    const auto zb = codes_for(mb);
    Rng rng(opts.seed);
    const auto null = permutation_null(za, zb, n_draws, rng);

    std::ostringstream canon;
    canon << "match;" << model_a << ";" << model_b << ";draws=" << n_draws
          << ";kept=" << kept_only;
    ensure_out_dir(opts.out_dir);
    json out{{"reproducibility", repro_block(opts.seed, canon.str())},
             {"model_a", model_a},
             {"model_b", model_b},
             {"observed_correlation", null.observed},
             {"null_mean", null.mean},
             {"null_std", null.std},
             {"null_min", *std::min_element(null.draws.begin(), null.draws.end())},
             {"null_max", *std::max_element(null.draws.begin(), null.draws.end())},
             {"zscore", null.zscore},
             {"n_draws", n_draws}};
    if (verbose) out["draws"] = null.draws;
    write_text_file(out_path(opts, "match.json"), out.dump(2) + "\n");

    CsvWriter csv(out_path(opts, "match.csv"));
    csv.row({"model_a", "model_b", "observed", "null_mean", "null_std", "zscore"});
    csv.row({model_a, model_b, format_double(null.observed), format_double(null.mean),
             format_double(null.std), format_double(null.zscore)});
    return 0;
}

// ------------------------------------------------------------ freq-trend --

int run_freq_trend(const CommonOpts& opts, const std::string& model_a, const std::string& model_b,
                   std::size_t window, std::size_t step, const std::string& metric_name,
                   const std::string& variant) {
    const Manifest man = load_manifest(opts.manifest_path);
    if (!man.frequency_table_path) throw Error("manifest has no frequency_table_path");
    const auto freq = load_frequency_table(*man.frequency_table_path);

    const auto find = [&](const std::string& name) -> const ManifestModel& {
        const auto it = std::find_if(man.models.begin(), man.models.end(),
                                     [&](const ManifestModel& m) { return m.name == name; });
        if (it == man.models.end()) throw Error("model not in manifest: " + name);
        return *it;
    };
    const Matrix fa = load_variant(man, find(model_a), variant);
    const Matrix fb = load_variant(man, find(model_b), variant);

    std::vector<double> frequencies = freq.frequencies;
    if (man.row_subset_path) {
        const auto subset = load_row_subset(*man.row_subset_path);
        std::vector<double> sub;
        sub.reserve(subset.size());
        for (std::size_t idx : subset) sub.push_back(frequencies.at(idx));
        frequencies = std::move(sub);
    }

    const MetricId metric = MetricId::parse(metric_name);
    const auto report = sliding_window_trend(fa, fb, frequencies, window, step, metric);

    std::ostringstream canon;
    canon << "freq-trend;" << model_a << ";" << model_b << ";w=" << window << ";s=" << step
          << ";" << metric.name() << ";" << variant;
    ensure_out_dir(opts.out_dir);
    CsvWriter csv(out_path(opts, "freq_trend.csv"));
    csv.row({"window", "mean_inv_sqrt_freq", "alignment"});
    for (std::size_t i = 0; i < report.window_centers.size(); ++i) {
        csv.row({std::to_string(i), format_double(report.window_centers[i]),
                 format_double(report.alignments[i])});
    }
    json out{{"reproducibility", repro_block(opts.seed, canon.str())},
             {"model_a", model_a},
             {"model_b", model_b},
             {"metric", metric.name()},
             {"window", window},
             {"step", step},
             {"n_windows", report.window_centers.size()},
             {"slope", report.slope},
             {"intercept", report.intercept},
             {"r_squared", report.r_squared},
             {"single_window", report.single_window},
             {"zero_variance", report.zero_variance}};
    write_text_file(out_path(opts, "freq_trend.json"), out.dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------- spec-regress --

int run_spec_regress(const CommonOpts& opts, double lambda,
                     const std::vector<std::string>& metric_names, std::size_t sample_size,
                     std::size_t n_samples, const std::string& variant) {
    const Manifest man = load_manifest(opts.manifest_path);
    if (man.models.size() < 2) throw TooFewModels("spec-regress needs at least 2 models");

    std::vector<ModelSpec> specs;
    specs.reserve(man.models.size());
    for (const auto& m : man.models) specs.push_back(m.spec);
    const auto features = build_spec_features(specs);

    const auto metrics = parse_metrics(metric_names);
    if (metrics.size() != 1) throw Error("spec-regress expects exactly one --metric");

    std::vector<Matrix> mats;
    mats.reserve(man.models.size());
    for (const auto& model : man.models) mats.push_back(load_variant(man, model, variant));

    Rng rng(opts.seed);
    std::vector<double> alignment;
    alignment.reserve(features.pair_index.size());
    for (std::size_t a = 0; a < man.models.size(); ++a) {
        for (std::size_t b = a + 1; b < man.models.size(); ++b) {
            const std::size_t eff_sample = std::min(sample_size, mats[a].rows());
            const auto report =
                subsampled_alignment(mats[a], mats[b], metrics[0], eff_sample, n_samples, rng);
            alignment.push_back(report.mean);
        }
    }

    const auto coef = ridge_fit(features.features, alignment, lambda);

    std::ostringstream canon;
    canon << "spec-regress;lambda=" << lambda << ";" << metrics[0].name() << ";" << variant
          << ";sample=" << sample_size << ";n=" << n_samples;
    ensure_out_dir(opts.out_dir);
    CsvWriter csv(out_path(opts, "spec_regress.csv"));
    csv.row({"feature", "coefficient"});
    for (std::size_t j = 0; j < coef.size(); ++j) {
        csv.row({features.feature_names[j], format_double(coef[j])});
    }
    json out{{"reproducibility", repro_block(opts.seed, canon.str())},
             {"lambda", lambda},
             {"metric", metrics[0].name()},
             {"n_pairs", features.pair_index.size()},
             {"feature_names", features.feature_names},
             {"coefficients", coef}};
    write_text_file(out_path(opts, "spec_regress.json"), out.dump(2) + "\n");
    return 0;
}

// ----------------------------------------------------------- incoherence --

int run_incoherence(const CommonOpts& opts, const std::vector<std::string>& sae_paths,
                    const std::vector<std::size_t>& dims, std::size_t m_atoms) {
    ensure_out_dir(opts.out_dir);
    CsvWriter csv(out_path(opts, "incoherence.csv"));
    json rows = json::array();

    if (!sae_paths.empty()) {
        csv.row({"source", "d_model", "d_sparse", "mean_abs", "max_abs"});
        for (const auto& path : sae_paths) {
            const auto [params, k] = load_sae(path);
            (void)k;
            const auto stats = incoherence_stats(params.decoder_weight);
            csv.row({path, std::to_string(params.d_model()), std::to_string(params.d_sparse()),
                     format_double(stats.mean_abs), format_double(stats.max_abs)});
            rows.push_back(json{{"source", path},
                                {"d_model", params.d_model()},
                                {"d_sparse", params.d_sparse()},
                                {"mean_abs", stats.mean_abs},
                                {"max_abs", stats.max_abs}});
        }
    } else {
        if (dims.empty()) throw Error("incoherence: give --sae paths or --dims");
        csv.row({"d", "m", "mean_abs", "max_abs", "expected_mean"});
        Rng rng(opts.seed);
        for (std::size_t d : dims) {
            const auto draw = generate_dictionary(d, m_atoms, rng);
            const double expected = std::sqrt(2.0 / (3.14159265358979323846 * static_cast<double>(d)));
            csv.row({std::to_string(d), std::to_string(m_atoms), format_double(draw.eps_mean),
                     format_double(draw.eps_max), format_double(expected)});
            rows.push_back(json{{"d", d},
                                {"m", m_atoms},
                                {"mean_abs", draw.eps_mean},
                                {"max_abs", draw.eps_max},
                                {"expected_mean", expected}});
        }
    }
    std::ostringstream canon;
    canon << "incoherence;m=" << m_atoms << ";n_inputs=" << (sae_paths.size() + dims.size());
    json out{{"reproducibility", repro_block(opts.seed, canon.str())}, {"rows", rows}};
    write_text_file(out_path(opts, "incoherence.json"), out.dump(2) + "\n");
    return 0;
}

// --------------------------------------------------------- synth certify --

int run_synth_certify(const CommonOpts& opts, const SyntheticConfig& base,
                      const std::vector<double>& gammas, bool verbose_pairs) {
    SyntheticConfig config = base;
    config.seed = opts.seed;
    config.validate();

    const auto instance = build_instance(config);
    const auto bounds = check_all_bounds(instance);

    json jgamma = json::array();
    std::size_t consequent_failures = 0;
    bool precondition_met = true;
    for (double gamma : gammas) {
        const auto report = verify_prop1(instance, gamma);
        precondition_met = report.precondition_met;
        consequent_failures += report.part1_failures + report.part2_failures;
        jgamma.push_back(json{{"gamma", gamma},
                              {"precondition_met", report.precondition_met},
                              {"precondition_value", report.precondition_value},
                              {"part1_antecedents", report.part1_antecedents},
                              {"part1_failures", report.part1_failures},
                              {"part2_antecedents", report.part2_antecedents},
                              {"part2_failures", report.part2_failures}});
    }

    std::ostringstream canon;
    canon << "synth-certify;d=" << config.d << ";m=" << config.m << ";k=" << config.k
          << ";phi=" << config.phi << ";Phi=" << config.Phi << ";eps=" << config.eps_noise_raw
          << ";pairs=" << config.n_pairs;
    ensure_out_dir(opts.out_dir);

    json out{{"reproducibility", repro_block(opts.seed, canon.str())},
             {"config",
              {{"d", config.d},
               {"m", config.m},
               {"k", config.k},
               {"phi", config.phi},
               {"Phi", config.Phi},
               {"eps_noise_raw", config.eps_noise_raw},
               {"n_pairs_per_t", config.n_pairs},
               {"overlap_schedule", config.overlap_schedule},
               {"orthonormal_dictionary", config.orthonormal_dictionary}}},
             {"measured",
              {{"eps_dict_max", instance.eps_dict_max},
               {"eps_dict_mean", instance.eps_dict_mean},
               {"eps_noise_effective", instance.eps_noise_effective}}},
             {"bounds",
              {{"pairs_checked", bounds.pairs_checked},
               {"violations", bounds.violations.size()},
               {"min_slack_signal", bounds.min_slack_signal},
               {"min_slack_bias", bounds.min_slack_bias},
               {"min_slack_noise", bounds.min_slack_noise},
               {"max_additivity_error", bounds.max_additivity_error}}},
             {"prop1", jgamma}};
    if (verbose_pairs) {
        json decs = json::array();
        for (std::size_t p = 0; p < instance.n_pairs(); ++p) {
            const auto dec = decompose_inner_product(instance, 2 * p, 2 * p + 1);
            decs.push_back(json{{"pair", p},
                                {"t", dec.support_overlap},
                                {"signal", dec.signal},
                                {"bias", dec.bias},
                                {"noise", dec.noise},
                                {"inner_product", dec.inner_product}});
        }
        out["pairs"] = decs;
    }
    write_text_file(out_path(opts, "certify.json"), out.dump(2) + "\n");

    CsvWriter csv(out_path(opts, "certify.csv"));
    csv.row({"gamma", "precondition_met", "part1_antecedents", "part1_failures",
             "part2_antecedents", "part2_failures"});
    for (const auto& g : jgamma) {
        csv.row({format_double(g["gamma"].get<double>()),
                 g["precondition_met"].get<bool>() ? "1" : "0",
                 std::to_string(g["part1_antecedents"].get<std::size_t>()),
                 std::to_string(g["part1_failures"].get<std::size_t>()),
                 std::to_string(g["part2_antecedents"].get<std::size_t>()),
                 std::to_string(g["part2_failures"].get<std::size_t>())});
    }

    std::printf("bounds: %zu pairs, %zu violations\n", bounds.pairs_checked,
                bounds.violations.size());
    std::printf("prop1: precondition %s, consequent failures %zu\n",
                precondition_met ? "met" : "unmet", consequent_failures);
    if (!bounds.ok() || consequent_failures > 0) return 2;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"representation-alignment laboratory"};
    app.set_config("--config");
    app.require_subcommand(1);
    app.fallthrough();

    CommonOpts opts;
    app.add_option("--manifest", opts.manifest_path, "manifest JSON path");
    app.add_option("--seed", opts.seed, "random seed");
    app.add_option("--out-dir", opts.out_dir, "output directory");

    // align
    auto* align = app.add_subcommand("align", "pairwise alignment reports");
    std::vector<std::string> metric_names;
    std::size_t sample_size = 1000, n_samples = 10;
    std::string variant = "raw";
    align->add_option("--metric", metric_names, "metric (repeatable)");
    align->add_option("--sample-size", sample_size, "subsample size");
    align->add_option("--n-samples", n_samples, "number of subsamples");
    align->add_option("--variant", variant, "raw | debiased | sparse")
        ->check(CLI::IsMember({"raw", "debiased", "sparse"}));

    // sae train / encode
    auto* sae = app.add_subcommand("sae", "sparse autoencoder commands");
    sae->require_subcommand(1);
    sae->fallthrough();
    auto* sae_train_cmd = sae->add_subcommand("train", "train per-model top-k autoencoders");
    std::vector<std::string> only_models;
    std::size_t d_sparse = 16384;
    std::size_t k_opt = 0, steps_opt = 0, batch_opt = 0;
    double lr_opt = 0.0;
    sae_train_cmd->add_option("--model", only_models, "train only these models (repeatable)");
    sae_train_cmd->add_option("--d-sparse", d_sparse, "sparse dimension");
    sae_train_cmd->add_option("--k", k_opt, "override per-model sparsity");
    sae_train_cmd->add_option("--steps", steps_opt, "training steps");
    sae_train_cmd->add_option("--batch-size", batch_opt, "batch size");
    sae_train_cmd->add_option("--learning-rate", lr_opt, "AdamW learning rate");

    auto* sae_encode_cmd = sae->add_subcommand("encode", "encode a model's embeddings");
    std::string encode_model, encode_sae;
    sae_encode_cmd->add_option("--model", encode_model, "model name")->required();
    sae_encode_cmd->add_option("--sae", encode_sae, "sae artifact (defaults to manifest sae_path)");

    // match
    auto* match = app.add_subcommand("match", "permutation-matched sparse correlation");
    std::string model_a, model_b;
    std::size_t n_draws = 100;
    bool kept_only = false, verbose = false;
    match->add_option("--model-a", model_a, "first model")->required();
    match->add_option("--model-b", model_b, "second model")->required();
    match->add_option("--n-draws", n_draws, "permutation-null draws");
    match->add_flag("--kept-only", kept_only, "restrict to filtered features");
    match->add_flag("--verbose", verbose, "include the full draw list");

    // freq-trend
    auto* freq = app.add_subcommand("freq-trend", "frequency-window alignment trend");
    std::string ft_a, ft_b, ft_metric = "knn_overlap:10", ft_variant = "raw";
    std::size_t window = 500, step = 250;
    freq->add_option("--model-a", ft_a, "first model")->required();
    freq->add_option("--model-b", ft_b, "second model")->required();
    freq->add_option("--window", window, "window size");
    freq->add_option("--step", step, "window step");
    freq->add_option("--metric", ft_metric, "metric");
    freq->add_option("--variant", ft_variant, "raw | debiased | sparse");

    // spec-regress
    auto* regress = app.add_subcommand("spec-regress", "ridge-regress alignment on model specs");
    double lambda = 1.0;
    std::vector<std::string> sr_metrics;
    std::size_t sr_sample = 1000, sr_n = 10;
    std::string sr_variant = "raw";
    regress->add_option("--lambda", lambda, "ridge penalty");
    regress->add_option("--metric", sr_metrics, "metric");
    regress->add_option("--sample-size", sr_sample, "subsample size");
    regress->add_option("--n-samples", sr_n, "number of subsamples");
    regress->add_option("--variant", sr_variant, "raw | debiased | sparse");

    // incoherence
    auto* inco = app.add_subcommand("incoherence", "dictionary incoherence statistics");
    std::vector<std::string> sae_paths;
    std::vector<std::size_t> dims;
    std::size_t m_atoms = 1024;
    inco->add_option("--sae", sae_paths, "sae artifacts (repeatable)");
    inco->add_option("--dims", dims, "ambient dimensions for random dictionaries");
    inco->add_option("--m", m_atoms, "number of dictionary atoms");

    // synth certify
    auto* synth = app.add_subcommand("synth", "synthetic statistical-model commands");
    synth->require_subcommand(1);
    synth->fallthrough();
    auto* certify = synth->add_subcommand("certify", "bound and proposition certification");
    SyntheticConfig synth_config;
    std::vector<double> gammas = {0.05, 0.1, 0.2};
    bool verbose_pairs = false;
    certify->add_option("--d", synth_config.d, "ambient dimension");
    certify->add_option("--m", synth_config.m, "dictionary size");
    certify->add_option("--k", synth_config.k, "support size");
    certify->add_option("--phi", synth_config.phi, "lower magnitude bound");
    certify->add_option("--Phi", synth_config.Phi, "upper magnitude bound");
    certify->add_option("--eps-noise", synth_config.eps_noise_raw, "raw noise radius");
    certify->add_option("--pairs-per-t", synth_config.n_pairs, "pairs per overlap target");
    certify->add_option("--t-schedule", synth_config.overlap_schedule, "overlap targets");
    certify->add_option("--gamma", gammas, "gamma sweep");
    certify->add_flag("--orthonormal", synth_config.orthonormal_dictionary,
                      "orthonormalize the dictionary (m <= d)");
    certify->add_flag("--verbose-pairs", verbose_pairs, "emit per-pair decompositions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (align->parsed()) {
            return run_align(opts, metric_names, sample_size, n_samples, variant);
        }
        if (sae_train_cmd->parsed()) {
            return run_sae_train(opts, only_models, d_sparse,
                                 k_opt ? std::optional<std::size_t>(k_opt) : std::nullopt,
                                 steps_opt ? std::optional<std::size_t>(steps_opt) : std::nullopt,
                                 batch_opt ? std::optional<std::size_t>(batch_opt) : std::nullopt,
                                 lr_opt > 0.0 ? std::optional<double>(lr_opt) : std::nullopt);
        }
        if (sae_encode_cmd->parsed()) {
            return run_sae_encode(opts, encode_model, encode_sae);
        }
        if (match->parsed()) {
            return run_match(opts, model_a, model_b, n_draws, kept_only, verbose);
        }
        if (freq->parsed()) {
            return run_freq_trend(opts, ft_a, ft_b, window, step, ft_metric, ft_variant);
        }
        if (regress->parsed()) {
            return run_spec_regress(opts, lambda, sr_metrics, sr_sample, sr_n, sr_variant);
        }
        if (inco->parsed()) {
            return run_incoherence(opts, sae_paths, dims, m_atoms);
        }
        if (certify->parsed()) {
            return run_synth_certify(opts, synth_config, gammas, verbose_pairs);
        }
        std::fprintf(stderr, "no subcommand selected\n");
        return 1;
    } catch (const ralab::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
