#pragma once

// Independent reference implementations used only by the tests. They favour
// obviousness over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense random_symmetric(std::size_t n, std::mt19937_64& rng, double lo = 0.0, double hi = 10.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Dense d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = u(rng);
    return d;
}

struct NaiveDendrogram {
    std::vector<double> heights;                    // in merge order
    std::vector<std::pair<std::set<std::size_t>, std::set<std::size_t>>> merged;  // member sets
};

// Recomputes every inter-cluster max distance from scratch at each step.
inline NaiveDendrogram complete_linkage(const Dense& d) {
    const std::size_t n = d.size();
    std::vector<std::set<std::size_t>> clusters;
    for (std::size_t i = 0; i < n; ++i) clusters.push_back({i});
    NaiveDendrogram out;
    while (clusters.size() > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t ba = 0, bb = 1;
        for (std::size_t a = 0; a < clusters.size(); ++a)
            for (std::size_t b = a + 1; b < clusters.size(); ++b) {
                double link = 0.0;
                for (auto i : clusters[a])
                    for (auto j : clusters[b]) link = std::max(link, d[i][j]);
                if (link < best) {
                    best = link;
                    ba = a;
                    bb = b;
                }
            }
        out.heights.push_back(best);
        out.merged.push_back({clusters[ba], clusters[bb]});
        clusters[ba].insert(clusters[bb].begin(), clusters[bb].end());
        clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(bb));
    }
    return out;
}

// Partition after applying the first `count` merges, as a canonical set of sets.
inline std::set<std::set<std::size_t>> partition_after(const NaiveDendrogram& dg, std::size_t n, std::size_t count) {
    std::vector<std::size_t> owner(n);
    for (std::size_t i = 0; i < n; ++i) owner[i] = i;
    for (std::size_t m = 0; m < count; ++m) {
        const std::size_t target = owner[*dg.merged[m].first.begin()];
        for (auto i : dg.merged[m].second) {
            const std::size_t from = owner[i];
            for (auto& o : owner)
                if (o == from) o = target;
        }
    }
    std::map<std::size_t, std::set<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[owner[i]].insert(i);
    std::set<std::set<std::size_t>> out;
    for (auto& [k, g] : groups) out.insert(g);
    return out;
}

inline std::set<std::set<std::size_t>> as_sets(const std::vector<int>& labels) {
    std::map<int, std::set<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].insert(i);
    std::set<std::set<std::size_t>> out;
    for (auto& [k, g] : groups) out.insert(g);
    return out;
}

// Adjusted Rand index by enumerating every unordered pair.
inline double ari_pairs(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t n = a.size();
    double both = 0, in_a = 0, in_b = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            both += sa && sb;
            in_a += sa;
            in_b += sb;
            pairs += 1;
        }
    if (pairs == 0) return 1.0;
    const double expected = in_a * in_b / pairs;
    const double maximum = 0.5 * (in_a + in_b);
    if (maximum == expected) return both == expected ? 1.0 : 0.0;
    return (both - expected) / (maximum - expected);
}

inline double entropy(const std::vector<int>& a) {
    std::map<int, double> c;
    for (int x : a) c[x] += 1;
    double h = 0;
    for (auto& [k, v] : c) {
        const double p = v / static_cast<double>(a.size());
        h -= p * std::log(p);
    }
    return h;
}

// NMI via H(A) + H(B) - H(A, B) over the arithmetic mean of the entropies.
inline double nmi_entropy(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> joint;
    int base = 0;
    for (int x : b) base = std::max(base, x + 1);
    for (std::size_t i = 0; i < a.size(); ++i) joint.push_back(a[i] * base + b[i]);
    const double ha = entropy(a), hb = entropy(b);
    if (ha == 0.0 && hb == 0.0) return 1.0;
    const double mi = ha + hb - entropy(joint);
    return mi / (0.5 * (ha + hb));
}

inline double purity(const std::vector<std::size_t>& members, const std::vector<int>& labels) {
    std::map<int, std::size_t> c;
    std::size_t best = 0;
    for (auto i : members) best = std::max(best, ++c[labels[i]]);
    return static_cast<double>(best) / static_cast<double>(members.size());
}

// Cluster precision / recall straight from the purity definitions.
inline std::pair<double, double> prf_direct(const std::vector<int>& pred, const std::vector<int>& gt) {
    auto groups = [](const std::vector<int>& l) {
        std::map<int, std::vector<std::size_t>> g;
        for (std::size_t i = 0; i < l.size(); ++i) g[l[i]].push_back(i);
        return g;
    };
    double p = 0, r = 0;
    const auto gp = groups(pred), gg = groups(gt);
    for (auto& [k, m] : gp) p += purity(m, gt);
    for (auto& [k, m] : gg) r += purity(m, pred);
    return {p / static_cast<double>(gp.size()), r / static_cast<double>(gg.size())};
}

inline Dense pdist(const std::vector<std::vector<double>>& rows) {
    Dense d(rows.size(), std::vector<double>(rows.size(), 0.0));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.size(); ++j) {
            double s = 0;
            for (std::size_t k = 0; k < rows[i].size(); ++k) s += (rows[i][k] - rows[j][k]) * (rows[i][k] - rows[j][k]);
            d[i][j] = std::sqrt(s);
        }
    return d;
}

inline double softmax_ce(const std::vector<std::vector<double>>& logits, const std::vector<int>& y) {
    double total = 0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        double z = 0;
        for (double v : logits[i]) z += std::exp(v);
        total += std::log(z) - logits[i][static_cast<std::size_t>(y[i])];
    }
    return total / static_cast<double>(logits.size());
}

}  // namespace oracle
