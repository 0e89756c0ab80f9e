#include "mspl/dataset.hpp"

#include <cmath>
#include <fstream>
#include <unordered_map>

#include "mspl/csv.hpp"
#include "mspl/errors.hpp"

namespace mspl {

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
    Matrix out(indices.size(), cols);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto src = row(indices[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return out;
}

Matrix pairwise_euclidean(const Matrix& rows) {
    const std::size_t n = rows.rows;
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < rows.cols; ++c) {
                const double d = rows(i, c) - rows(j, c);
                acc += d * d;
            }
            out(i, j) = out(j, i) = std::sqrt(acc);
        }
    return out;
}

void DissimilarityMatrix::validate() const {
    const std::size_t n = ids.size();
    if (values.rows != n || values.cols != n)
        throw DataError("dissimilarity matrix is " + std::to_string(values.rows) + "x" + std::to_string(values.cols) +
                        " for " + std::to_string(n) + " ids");
    for (std::size_t i = 0; i < n; ++i) {
        if (values(i, i) != 0.0) throw DataError("dissimilarity diagonal is nonzero at id " + ids[i]);
        for (std::size_t j = 0; j < n; ++j) {
            const double v = values(i, j);
            if (!std::isfinite(v)) throw DataError("non-finite dissimilarity between " + ids[i] + " and " + ids[j]);
            if (v < 0.0) throw DataError("negative dissimilarity between " + ids[i] + " and " + ids[j]);
            if (v != values(j, i)) throw DataError("asymmetric dissimilarity between " + ids[i] + " and " + ids[j]);
        }
    }
}

DissimilarityMatrix DissimilarityMatrix::subset(std::span<const std::size_t> indices) const {
    DissimilarityMatrix out;
    out.ids.reserve(indices.size());
    out.values = Matrix(indices.size(), indices.size());
    for (std::size_t a = 0; a < indices.size(); ++a) {
        out.ids.push_back(ids.at(indices[a]));
        for (std::size_t b = 0; b < indices.size(); ++b) out.values(a, b) = values(indices[a], indices[b]);
    }
    return out;
}

const char* to_string(DatasetKind kind) {
    switch (kind) {
        case DatasetKind::synth: return "synth";
        case DatasetKind::snp: return "snp";
        case DatasetKind::amr: return "amr";
    }
    return "unknown";
}

DatasetKind dataset_kind_from_string(const std::string& s) {
    if (s == "synth") return DatasetKind::synth;
    if (s == "snp") return DatasetKind::snp;
    if (s == "amr") return DatasetKind::amr;
    throw UsageError("unknown dataset kind '" + s + "' (expected synth, snp or amr)");
}

void Dataset::validate() const {
    const std::size_t n = ids.size();
    if (n == 0) throw DataError("dataset is empty");
    if (features.rows != n) throw DataError("feature rows do not match sample count");
    if (labels.size() != n) throw DataError("label count does not match sample count");
    for (int y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= label_names.size())
            throw DataError("pretext label id " + std::to_string(y) + " has no name");
    if (dissimilarity.ids != ids) throw DataError("dissimilarity ids do not match dataset ids");
    dissimilarity.validate();
    if (gt_clusters && gt_clusters->size() != n) throw DataError("ground-truth cluster count does not match samples");
}

void write_dissimilarity_csv(const DissimilarityMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "id";
    for (const auto& id : m.ids) out << ',' << id;
    out << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << m.ids[i];
        for (std::size_t j = 0; j < m.size(); ++j) out << ',' << csv::format_double(m.values(i, j));
        out << '\n';
    }
}

DissimilarityMatrix read_dissimilarity_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::string src = path.string();
    DissimilarityMatrix m;
    m.ids.assign(table.header.begin() + 1, table.header.end());
    const std::size_t n = m.ids.size();
    if (table.rows.size() != n)
        throw DataError(src + ": " + std::to_string(table.rows.size()) + " rows for " + std::to_string(n) + " columns");
    std::unordered_map<std::string, std::size_t> column_of;
    for (std::size_t j = 0; j < n; ++j)
        if (!column_of.emplace(m.ids[j], j).second) throw DataError(src + ": duplicate id '" + m.ids[j] + "'");
    m.values = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = table.rows[i];
        if (row.fields[0] != m.ids[i])
            throw DataError(src + ":" + std::to_string(row.line) + ": row id '" + row.fields[0] +
                            "' does not match column id '" + m.ids[i] + "'");
        for (std::size_t j = 0; j < n; ++j) m.values(i, j) = csv::parse_double(row.fields[j + 1], src, row.line);
    }
    return m;
}

void write_clusters_csv(std::span<const std::string> ids, std::span<const int> clusters,
                        const std::filesystem::path& path) {
    if (ids.size() != clusters.size()) throw UsageError("cluster count does not match ids");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "id,cluster_id\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ',' << clusters[i] << '\n';
}

std::vector<int> read_clusters_csv(const std::filesystem::path& path, std::span<const std::string> ids) {
    const auto table = csv::read(path);
    const std::string src = path.string();
    const auto id_col = table.column("id");
    const auto c_col = table.column("cluster_id");
    std::unordered_map<std::string, int> by_id;
    for (const auto& row : table.rows)
        by_id[row.fields[id_col]] = static_cast<int>(csv::parse_int(row.fields[c_col], src, row.line));
    std::vector<int> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw DataError(src + ": missing id '" + id + "'");
        out.push_back(it->second);
    }
    return out;
}

void write_matrix_csv(std::span<const std::string> ids, const Matrix& m, const std::string& prefix,
                      const std::filesystem::path& path) {
    if (ids.size() != m.rows) throw UsageError("matrix rows do not match ids");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "id";
    for (std::size_t j = 0; j < m.cols; ++j) out << ',' << prefix << j;
    out << '\n';
    for (std::size_t i = 0; i < m.rows; ++i) {
        out << ids[i];
        for (std::size_t j = 0; j < m.cols; ++j) out << ',' << csv::format_double(m(i, j));
        out << '\n';
    }
}

std::pair<std::vector<std::string>, Matrix> read_matrix_csv(const std::filesystem::path& path) {
    const auto table = csv::read(path);
    const std::string src = path.string();
    const std::size_t cols = table.header.size() - 1;
    std::vector<std::string> ids;
    Matrix m(table.rows.size(), cols);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        ids.push_back(row.fields[0]);
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = csv::parse_double(row.fields[j + 1], src, row.line);
    }
    return {std::move(ids), std::move(m)};
}

void write_dataset(const Dataset& data, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "features.csv");
        if (!out) throw DataError("cannot write " + (dir / "features.csv").string());
        out << "id,species";
        for (std::size_t j = 0; j < data.features.cols; ++j) out << ",f" << j;
        out << '\n';
        for (std::size_t i = 0; i < data.size(); ++i) {
            out << data.ids[i] << ',' << data.label_names[data.labels[i]];
            for (double v : data.features.row(i)) out << ',' << csv::format_double(v);
            out << '\n';
        }
    }
    write_dissimilarity_csv(data.dissimilarity, dir / "dissim.csv");
    if (data.gt_clusters) write_clusters_csv(data.ids, *data.gt_clusters, dir / "gt_clusters.csv");
}

}  // namespace mspl
