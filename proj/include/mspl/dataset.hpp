#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mspl {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), values(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
    std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }

    Matrix select_rows(std::span<const std::size_t> indices) const;
    bool operator==(const Matrix&) const = default;
};

/// Euclidean distance between every pair of rows.
Matrix pairwise_euclidean(const Matrix& rows);

/// Symmetric, nonnegative, zero-diagonal matrix of pairwise dissimilarities
/// keyed by sample id.
struct DissimilarityMatrix {
    std::vector<std::string> ids;
    Matrix values;

    std::size_t size() const noexcept { return ids.size(); }
    double operator()(std::size_t i, std::size_t j) const { return values(i, j); }

    /// Throws DataError unless the matrix is square, finite, symmetric,
    /// nonnegative and zero on the diagonal.
    void validate() const;
    DissimilarityMatrix subset(std::span<const std::size_t> indices) const;
};

enum class DatasetKind { synth, snp, amr };

const char* to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& s);

/// Samples of the primary modality with pretext labels and the external
/// dissimilarity structure supplied by the second modality.
struct Dataset {
    DatasetKind kind = DatasetKind::synth;
    std::vector<std::string> ids;
    Matrix features;                       // one row per sample
    std::vector<int> labels;               // dense pretext label ids
    std::vector<std::string> label_names;  // label id -> name
    DissimilarityMatrix dissimilarity;
    std::optional<std::vector<int>> gt_clusters;  // generator-provided ground truth

    std::size_t size() const noexcept { return ids.size(); }
    std::size_t num_classes() const noexcept { return label_names.size(); }
    void validate() const;
};

/// Writes `features.csv` (id, species, f0..), `dissim.csv` and, when present,
/// `gt_clusters.csv` into a directory.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);

void write_dissimilarity_csv(const DissimilarityMatrix& m, const std::filesystem::path& path);
DissimilarityMatrix read_dissimilarity_csv(const std::filesystem::path& path);

void write_clusters_csv(std::span<const std::string> ids, std::span<const int> clusters,
                        const std::filesystem::path& path);
/// Reads `id,cluster_id` rows and returns them aligned to `ids`; every id must be present.
std::vector<int> read_clusters_csv(const std::filesystem::path& path, std::span<const std::string> ids);

void write_matrix_csv(std::span<const std::string> ids, const Matrix& m, const std::string& prefix,
                      const std::filesystem::path& path);
/// Reads an `id, <prefix>0, <prefix>1, ...` matrix file.
std::pair<std::vector<std::string>, Matrix> read_matrix_csv(const std::filesystem::path& path);

}  // namespace mspl
