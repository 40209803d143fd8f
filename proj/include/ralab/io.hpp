#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ralab/analysis.hpp"
#include "ralab/matrix.hpp"

namespace ralab {

/// Binary embedding file: magic "EMB1", u32 LE row count, u32 LE width,
/// then n*d f32 LE values row-major. A ".csv" path instead parses
/// headerless numeric rows.
Matrix read_embedding_file(const std::string& path);
void write_embedding_file(const std::string& path, const Matrix& m);

struct LoadedEmbeddings {
    Matrix rows;                     // unit-normalized
    std::size_t norm_warnings = 0;  // rows whose stored norm was off by > 1e-3
};

/// Reads the file and enforces unit rows at the boundary, counting rows
/// whose stored norm deviated from 1 by more than 1e-3.
LoadedEmbeddings load_embeddings(const std::string& path);

struct ManifestModel {
    std::string name;
    std::string embedding_path;
    std::size_t sae_k = 32;
    std::optional<std::string> sae_path;
    ModelSpec spec;
};

struct Manifest {
    std::string dataset_name;
    std::vector<ManifestModel> models;
    std::optional<std::string> frequency_table_path;
    std::optional<std::string> row_subset_path;
};

/// JSON manifest; validates unique names and that referenced files exist.
Manifest load_manifest(const std::string& path);

struct FrequencyTable {
    std::vector<std::string> tokens;
    std::vector<double> frequencies;  // strictly positive
};

/// Tab-separated token/frequency rows, expected sorted descending.
FrequencyTable load_frequency_table(const std::string& path);

/// One row index per line.
std::vector<std::size_t> load_row_subset(const std::string& path);

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& rows);

/// Deterministic decimal formatting shared by every report writer.
std::string format_double(double v);

/// FNV-1a over a canonical config string; goes into report blocks so a
/// report names the configuration that produced it.
std::uint64_t config_hash(const std::string& canonical);

inline constexpr const char* kArtifactVersion = "0.1.0";

struct CsvWriter {
    explicit CsvWriter(const std::string& path);
    ~CsvWriter();
    void row(const std::vector<std::string>& cells);

private:
    void* fp_;
};

void write_text_file(const std::string& path, const std::string& content);

}  // namespace ralab
