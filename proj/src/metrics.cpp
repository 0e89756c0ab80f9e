#include "mspl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mspl/errors.hpp"

namespace mspl::metrics {

namespace {

void require_same_universe(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size())
        throw UsageError("partitions cover different sample counts (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
}

// Contingency table between two dense labellings.
struct Contingency {
    std::vector<std::size_t> counts;  // rows = a clusters, cols = b clusters
    std::vector<std::size_t> a_sizes, b_sizes;
    std::size_t n = 0;

    Contingency(std::span<const int> a, std::span<const int> b) : n(a.size()) {
        const auto na = cluster::normalize_labels(a);
        const auto nb = cluster::normalize_labels(b);
        a_sizes.assign(na.cluster_count(), 0);
        b_sizes.assign(nb.cluster_count(), 0);
        counts.assign(a_sizes.size() * b_sizes.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[static_cast<std::size_t>(na.labels[i]) * b_sizes.size() + static_cast<std::size_t>(nb.labels[i])];
            ++a_sizes[static_cast<std::size_t>(na.labels[i])];
            ++b_sizes[static_cast<std::size_t>(nb.labels[i])];
        }
    }
    std::size_t at(std::size_t i, std::size_t j) const { return counts[i * b_sizes.size() + j]; }
};

double comb2(std::size_t x) { return 0.5 * static_cast<double>(x) * static_cast<double>(x > 0 ? x - 1 : 0); }

double entropy_of(const std::vector<std::size_t>& sizes, std::size_t n) {
    double h = 0.0;
    for (auto s : sizes)
        if (s > 0) {
            const double p = static_cast<double>(s) / static_cast<double>(n);
            h -= p * std::log(p);
        }
    return h;
}

std::vector<int> gather(std::span<const int> v, std::span<const std::size_t> idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[i]);
    return out;
}

}  // namespace

double purity(std::span<const std::size_t> members, std::span<const int> labels) {
    if (members.empty()) throw UsageError("purity of an empty cluster is undefined");
    std::map<int, std::size_t> counts;
    std::size_t best = 0;
    for (auto i : members) best = std::max(best, ++counts[labels[i]]);
    return static_cast<double>(best) / static_cast<double>(members.size());
}

ClusterPrf cluster_prf_unfiltered(std::span<const int> pred, std::span<const int> gt) {
    require_same_universe(pred, gt);
    if (pred.empty()) throw UsageError("cluster_prf on an empty universe");
    const Contingency c(pred, gt);
    ClusterPrf r;
    for (std::size_t i = 0; i < c.a_sizes.size(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 0; j < c.b_sizes.size(); ++j) best = std::max(best, c.at(i, j));
        r.precision += static_cast<double>(best) / static_cast<double>(c.a_sizes[i]);
    }
    r.precision /= static_cast<double>(c.a_sizes.size());
    for (std::size_t j = 0; j < c.b_sizes.size(); ++j) {
        std::size_t best = 0;
        for (std::size_t i = 0; i < c.a_sizes.size(); ++i) best = std::max(best, c.at(i, j));
        r.recall += static_cast<double>(best) / static_cast<double>(c.b_sizes[j]);
    }
    r.recall /= static_cast<double>(c.b_sizes.size());
    const double s = r.precision + r.recall;
    r.f1 = s > 0.0 ? 2.0 * r.precision * r.recall / s : 0.0;
    return r;
}

std::vector<std::size_t> non_singleton_indices(std::span<const int> gt) {
    std::map<int, std::size_t> sizes;
    for (int g : gt) ++sizes[g];
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < gt.size(); ++i)
        if (sizes[gt[i]] >= 2) keep.push_back(i);
    return keep;
}

std::optional<ClusterPrf> cluster_prf(std::span<const int> pred, std::span<const int> gt) {
    require_same_universe(pred, gt);
    const auto keep = non_singleton_indices(gt);
    if (keep.empty()) return std::nullopt;
    const auto p = gather(pred, keep);
    const auto g = gather(gt, keep);
    return cluster_prf_unfiltered(p, g);
}

double adjusted_rand_index(std::span<const int> pred, std::span<const int> gt) {
    require_same_universe(pred, gt);
    const Contingency c(pred, gt);
    double index = 0.0;
    for (auto v : c.counts) index += comb2(v);
    double sum_a = 0.0, sum_b = 0.0;
    for (auto v : c.a_sizes) sum_a += comb2(v);
    for (auto v : c.b_sizes) sum_b += comb2(v);
    const double total = comb2(c.n);
    if (total == 0.0) return 1.0;
    const double expected = sum_a * sum_b / total;
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return index == expected ? (sum_a == sum_b ? 1.0 : 0.0) : 0.0;
    return (index - expected) / (max_index - expected);
}

double normalized_mutual_information(std::span<const int> pred, std::span<const int> gt) {
    require_same_universe(pred, gt);
    if (pred.empty()) throw UsageError("NMI on an empty universe");
    const Contingency c(pred, gt);
    const double n = static_cast<double>(c.n);
    const double ha = entropy_of(c.a_sizes, c.n);
    const double hb = entropy_of(c.b_sizes, c.n);
    if (ha == 0.0 && hb == 0.0) return 1.0;
    double mi = 0.0;
    for (std::size_t i = 0; i < c.a_sizes.size(); ++i)
        for (std::size_t j = 0; j < c.b_sizes.size(); ++j) {
            const auto nij = c.at(i, j);
            if (nij == 0) continue;
            const double pij = static_cast<double>(nij) / n;
            mi += pij * std::log(static_cast<double>(nij) * n /
                                 (static_cast<double>(c.a_sizes[i]) * static_cast<double>(c.b_sizes[j])));
        }
    const double v = mi / (0.5 * (ha + hb));
    return std::clamp(v, 0.0, 1.0);
}

double shannon_entropy(std::span<const int> assignment) {
    if (assignment.empty()) throw UsageError("entropy of an empty subset is undefined");
    std::map<int, std::size_t> counts;
    for (int a : assignment) ++counts[a];
    std::vector<std::size_t> sizes;
    for (const auto& [k, v] : counts) sizes.push_back(v);
    return entropy_of(sizes, assignment.size());
}

std::optional<double> lift(double f1_model, double f1_baseline) {
    if (!(f1_baseline > 0.0)) return std::nullopt;
    return f1_model / f1_baseline;
}

MetricReport evaluate_partition(std::span<const int> pred, std::span<const int> gt) {
    require_same_universe(pred, gt);
    MetricReport r;
    const auto keep = non_singleton_indices(gt);
    r.n_evaluated_samples = keep.size();
    if (keep.empty()) return r;
    const auto p = gather(pred, keep);
    const auto g = gather(gt, keep);
    r.n_predicted_clusters = cluster::normalize_labels(p).cluster_count();
    r.n_gt_clusters = cluster::normalize_labels(g).cluster_count();
    r.ari = adjusted_rand_index(p, g);
    r.nmi = normalized_mutual_information(p, g);
    const auto prf = cluster_prf_unfiltered(p, g);
    r.precision = prf.precision;
    r.recall = prf.recall;
    r.f1 = prf.f1;
    return r;
}

namespace {
nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }
std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}
}  // namespace

void to_json(nlohmann::json& j, const MetricReport& r) {
    j = nlohmann::json{{"ari", opt(r.ari)},
                       {"nmi", opt(r.nmi)},
                       {"precision", opt(r.precision)},
                       {"recall", opt(r.recall)},
                       {"f1", opt(r.f1)},
                       {"pretext_accuracy", opt(r.pretext_accuracy)},
                       {"n_predicted_clusters", r.n_predicted_clusters},
                       {"n_gt_clusters", r.n_gt_clusters},
                       {"n_evaluated_samples", r.n_evaluated_samples}};
}

void from_json(const nlohmann::json& j, MetricReport& r) {
    r.ari = opt_from(j, "ari");
    r.nmi = opt_from(j, "nmi");
    r.precision = opt_from(j, "precision");
    r.recall = opt_from(j, "recall");
    r.f1 = opt_from(j, "f1");
    r.pretext_accuracy = opt_from(j, "pretext_accuracy");
    r.n_predicted_clusters = j.value("n_predicted_clusters", std::size_t{0});
    r.n_gt_clusters = j.value("n_gt_clusters", std::size_t{0});
    r.n_evaluated_samples = j.value("n_evaluated_samples", std::size_t{0});
}

}  // namespace mspl::metrics
