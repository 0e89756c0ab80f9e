#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mspl/clustering.hpp"
#include "mspl/dataset.hpp"

namespace mspl::amr {

/// Resistance label alphabet. `one` is "susceptible or intermediate", `zero`
/// is "susceptible", `unknown` (N) covers missing values.
enum class AmrSymbol { S, I, R, one, zero, unknown };

constexpr int kAmrSymbolCount = 6;

AmrSymbol parse_symbol(const std::string& text, const std::string& sample_id);
char symbol_char(AmrSymbol s);

struct AmrProfile {
    std::string id;
    std::vector<AmrSymbol> labels;  // one per drug
};

/// Lookup-table similarity between two labels, 0 or 1.
int amr_label_similarity(AmrSymbol a, AmrSymbol b);
/// Number of drugs minus the summed label similarity.
int amr_dissimilarity(const AmrProfile& p, const AmrProfile& q);
DissimilarityMatrix amr_matrix(const std::vector<AmrProfile>& profiles);

/// Complete-linkage ground truth cut at `threshold` (10 for AMR, 15 for SNP).
cluster::ClusterAssignment derive_gt_clusters(const DissimilarityMatrix& matrix, double threshold);

constexpr double kAmrGtThreshold = 10.0;
constexpr double kSnpGtThreshold = 15.0;

/// `amr.csv`: id, one column per drug, cells in {S, I, R, 1, 0, N, blank}.
std::vector<AmrProfile> read_amr_csv(const std::filesystem::path& path);
void write_amr_csv(const std::vector<AmrProfile>& profiles, const std::vector<std::string>& drugs,
                   const std::filesystem::path& path);

/// Either a precomputed dissimilarity file or AMR profiles to convert.
struct StructureSource {
    std::filesystem::path path;
    enum class Kind { dissimilarity, amr_profiles } kind = Kind::dissimilarity;
};

struct PairedDataset {
    Dataset dataset;
    std::optional<std::vector<AmrProfile>> profiles;
    std::size_t num_drugs = 0;
};

/// Loads `features.csv` (id, species, f0..fD-1) with the external structure.
/// Species names map to dense ids in first-appearance order. Rows of every
/// file are re-ordered to the features file; ids must match exactly.
PairedDataset load_paired_dataset(const std::filesystem::path& features_path, const StructureSource& structure,
                                  DatasetKind kind);

/// `manifest.json`: label map, number of drugs/features, source files.
void write_manifest(const PairedDataset& data, const std::filesystem::path& path,
                    const std::vector<std::filesystem::path>& sources);

}  // namespace mspl::amr
