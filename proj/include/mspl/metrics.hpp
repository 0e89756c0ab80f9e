#pragma once

#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "mspl/clustering.hpp"

namespace mspl::metrics {

/// Fraction of `members` carrying the most common label.
double purity(std::span<const std::size_t> members, std::span<const int> labels);

struct ClusterPrf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Precision = mean purity of predicted clusters w.r.t. gt; recall = mean
/// purity of gt clusters w.r.t. pred; no filtering.
ClusterPrf cluster_prf_unfiltered(std::span<const int> pred, std::span<const int> gt);

/// Indices of samples whose gt cluster has at least two members.
std::vector<std::size_t> non_singleton_indices(std::span<const int> gt);

/// Cluster P/R/F1 on the samples whose gt cluster has >= 2 members; predicted
/// clusters are restricted to that subset. Empty when no such sample exists.
std::optional<ClusterPrf> cluster_prf(std::span<const int> pred, std::span<const int> gt);

double adjusted_rand_index(std::span<const int> pred, std::span<const int> gt);
/// Mutual information over the arithmetic mean of the two entropies. Two
/// single-cluster partitions score 1 by convention.
double normalized_mutual_information(std::span<const int> pred, std::span<const int> gt);
/// -sum p ln p over cluster proportions.
double shannon_entropy(std::span<const int> assignment);
/// f1_model / f1_baseline; empty when the baseline score is not positive.
std::optional<double> lift(double f1_model, double f1_baseline);

struct MetricReport {
    std::optional<double> ari;
    std::optional<double> nmi;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> pretext_accuracy;
    std::size_t n_predicted_clusters = 0;
    std::size_t n_gt_clusters = 0;
    std::size_t n_evaluated_samples = 0;
};

/// Restricts both partitions to the non-singleton gt universe and computes
/// ARI, NMI and cluster P/R/F1 there. Metrics are empty when that universe is empty.
MetricReport evaluate_partition(std::span<const int> pred, std::span<const int> gt);

void to_json(nlohmann::json& j, const MetricReport& r);
void from_json(const nlohmann::json& j, MetricReport& r);

}  // namespace mspl::metrics
