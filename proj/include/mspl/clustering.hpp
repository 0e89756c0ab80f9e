#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "mspl/dataset.hpp"

namespace mspl::cluster {

/// Node ids follow the usual convention: leaves are 0..n-1 and merge i
/// creates node n + i. `left` < `right`.
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double height = 0.0;
    std::size_t size = 0;
};

struct Dendrogram {
    std::size_t leaves = 0;
    std::vector<Merge> merges;  // n - 1 merges, non-decreasing height
};

/// Flat labelling; ids are dense from 0 in order of first appearance.
struct ClusterAssignment {
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t cluster_count() const;
    bool operator==(const ClusterAssignment&) const = default;
};

/// Relabels arbitrary integer ids densely in order of first appearance.
ClusterAssignment normalize_labels(std::span<const int> labels);

/// Complete-linkage agglomerative clustering by the nearest-neighbour-chain
/// algorithm, O(n^2) time and memory. Distance ties resolve toward the
/// previous chain element, then toward the smallest cluster index.
/// Throws DataError on non-square, asymmetric or non-finite input.
Dendrogram agglomerate_complete(const Matrix& dissimilarity);

/// Connected components after applying every merge with height <= tau.
ClusterAssignment cut_by_threshold(const Dendrogram& dendrogram, double tau);

/// Exactly q clusters: applies the first n - q merges.
ClusterAssignment cut_by_count(const Dendrogram& dendrogram, std::size_t q);

void write_dendrogram_csv(const Dendrogram& dendrogram, const std::filesystem::path& path);

}  // namespace mspl::cluster
