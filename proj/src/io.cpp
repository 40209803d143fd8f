#include "ralab/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ralab/kernels.hpp"

namespace ralab {

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Matrix read_embedding_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<double> data;
    std::size_t cols = 0, rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            data.push_back(std::stod(cell));
            ++c;
        }
        if (cols == 0) {
            cols = c;
        } else if (c != cols) {
            throw IoError("csv: ragged rows in " + path);
        }
        ++rows;
    }
    return Matrix(rows, cols, std::move(data));
}

}  // namespace

Matrix read_embedding_file(const std::string& path) {
    if (has_suffix(path, ".csv")) return read_embedding_csv(path);

    std::FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw IoError("cannot open: " + path);
    char magic[4] = {};
    if (std::fread(magic, 1, 4, fp) != 4 || std::memcmp(magic, "EMB1", 4) != 0) {
        std::fclose(fp);
        throw BadMagic("embedding file: bad magic in " + path);
    }
    std::uint32_t header[2] = {};
    if (std::fread(header, sizeof(std::uint32_t), 2, fp) != 2) {
        std::fclose(fp);
        throw TruncatedPayload("embedding file: missing header in " + path);
    }
    const std::size_t n = header[0], d = header[1];
    std::vector<float> payload(n * d);
    const std::size_t got = std::fread(payload.data(), sizeof(float), payload.size(), fp);
    // A trailing byte means the payload is longer than the header promises.
    char extra = 0;
    const bool more = std::fread(&extra, 1, 1, fp) == 1;
    std::fclose(fp);
    if (got != payload.size() || more) {
        throw TruncatedPayload("embedding file: payload size mismatch in " + path);
    }
    std::vector<double> data(payload.size());
    for (std::size_t i = 0; i < payload.size(); ++i) {
        if (!std::isfinite(payload[i])) throw NonFinite("embedding file: non-finite value");
        data[i] = static_cast<double>(payload[i]);
    }
    return Matrix(n, d, std::move(data));
}

void write_embedding_file(const std::string& path, const Matrix& m) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot open for writing: " + path);
    std::fwrite("EMB1", 1, 4, fp);
    const std::uint32_t header[2] = {static_cast<std::uint32_t>(m.rows()),
                                     static_cast<std::uint32_t>(m.cols())};
    std::fwrite(header, sizeof(std::uint32_t), 2, fp);
    for (double v : m.data()) {
        const float f = static_cast<float>(v);
        std::fwrite(&f, sizeof(float), 1, fp);
    }
    std::fclose(fp);
}

LoadedEmbeddings load_embeddings(const std::string& path) {
    const Matrix raw = read_embedding_file(path);
    LoadedEmbeddings out;
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        const double nrm = norm2(raw.row(i), raw.cols());
        if (std::fabs(nrm - 1.0) > 1e-3) ++out.norm_warnings;
    }
    out.rows = unit_normalize_rows(raw);
    return out;
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError("manifest parse error in " + path + ": " + e.what());
    }

    const auto base = std::filesystem::path(path).parent_path();
    const auto resolve = [&](const std::string& p) {
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    Manifest m;
    m.dataset_name = j.value("dataset_name", "");
    std::set<std::string> names;
    for (const auto& jm : j.at("models")) {
        ManifestModel model;
        model.name = jm.at("name").get<std::string>();
        if (!names.insert(model.name).second) {
            throw IoError("manifest: duplicate model name " + model.name);
        }
        model.embedding_path = resolve(jm.at("embedding_path").get<std::string>());
        if (!std::filesystem::exists(model.embedding_path)) {
            throw IoError("manifest: missing embedding file " + model.embedding_path);
        }
        model.sae_k = jm.value("sae_k", 32u);
        if (jm.contains("sae_path")) {
            model.sae_path = resolve(jm.at("sae_path").get<std::string>());
        }
        if (jm.contains("spec")) {
            const auto& js = jm.at("spec");
            model.spec.name = model.name;
            model.spec.params_count = js.value("params_count", 0.0);
            model.spec.depth = js.value("depth", 0.0);
            model.spec.width = js.value("width", 0.0);
            model.spec.text_tokens = js.value("text_tokens", 0.0);
            model.spec.image_tokens = js.value("image_tokens", 0.0);
            model.spec.modality = parse_modality(js.value("modality", std::string("llm")));
            model.spec.year = js.value("year", 0);
        } else {
            model.spec.name = model.name;
        }
        m.models.push_back(std::move(model));
    }
    if (j.contains("frequency_table_path")) {
        m.frequency_table_path = resolve(j.at("frequency_table_path").get<std::string>());
        if (!std::filesystem::exists(*m.frequency_table_path)) {
            throw IoError("manifest: missing frequency table " + *m.frequency_table_path);
        }
    }
    if (j.contains("row_subset_path")) {
        m.row_subset_path = resolve(j.at("row_subset_path").get<std::string>());
        if (!std::filesystem::exists(*m.row_subset_path)) {
            throw IoError("manifest: missing row subset " + *m.row_subset_path);
        }
    }
    return m;
}

FrequencyTable load_frequency_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    FrequencyTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw IoError("frequency table: missing tab at " + path + ":" +
                          std::to_string(lineno));
        }
        const double freq = std::stod(line.substr(tab + 1));
        if (!(freq > 0.0)) {
            throw IoError("frequency table: non-positive frequency at " + path + ":" +
                          std::to_string(lineno));
        }
        table.tokens.push_back(line.substr(0, tab));
        table.frequencies.push_back(freq);
    }
    return table;
}

std::vector<std::size_t> load_row_subset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<std::size_t> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        rows.push_back(static_cast<std::size_t>(std::stoull(line)));
    }
    return rows;
}

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= m.rows()) throw IndexOutOfRange("row subset index out of range");
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(rows[i], j);
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::uint64_t config_hash(const std::string& canonical) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : canonical) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

CsvWriter::CsvWriter(const std::string& path) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot open for writing: " + path);
    fp_ = fp;
}

CsvWriter::~CsvWriter() {
    if (fp_) std::fclose(static_cast<std::FILE*>(fp_));
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    std::FILE* fp = static_cast<std::FILE*>(fp_);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) std::fputc(',', fp);
        std::fputs(cells[i].c_str(), fp);
    }
    std::fputc('\n', fp);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot open for writing: " + path);
    std::fwrite(content.data(), 1, content.size(), fp);
    std::fclose(fp);
}

}  // namespace ralab
