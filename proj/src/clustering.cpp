#include "mspl/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "mspl/csv.hpp"
#include "mspl/errors.hpp"

namespace mspl::cluster {

namespace {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    // Returns the new root.
    std::size_t unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return a;
        if (b < a) std::swap(a, b);
        parent_[b] = a;
        return a;
    }

private:
    std::vector<std::size_t> parent_;
};

ClusterAssignment components(std::size_t n, const std::vector<Merge>& merges, std::size_t count) {
    // Merges refer to node ids; map every node back to a representative leaf.
    std::vector<std::size_t> leaf_of(n + merges.size());
    std::iota(leaf_of.begin(), leaf_of.begin() + static_cast<std::ptrdiff_t>(n), 0);
    UnionFind uf(n);
    for (std::size_t i = 0; i < merges.size(); ++i) {
        const std::size_t a = leaf_of[merges[i].left];
        leaf_of[n + i] = a;
        if (i < count) uf.unite(a, leaf_of[merges[i].right]);
    }
    std::vector<int> roots(n);
    for (std::size_t i = 0; i < n; ++i) roots[i] = static_cast<int>(uf.find(i));
    return normalize_labels(roots);
}

}  // namespace

std::size_t ClusterAssignment::cluster_count() const {
    int mx = -1;
    for (int l : labels) mx = std::max(mx, l);
    return static_cast<std::size_t>(mx + 1);
}

ClusterAssignment normalize_labels(std::span<const int> labels) {
    std::unordered_map<int, int> remap;
    ClusterAssignment out;
    out.labels.reserve(labels.size());
    for (int l : labels) {
        auto [it, inserted] = remap.emplace(l, static_cast<int>(remap.size()));
        out.labels.push_back(it->second);
    }
    return out;
}

Dendrogram agglomerate_complete(const Matrix& input) {
    const std::size_t n = input.rows;
    if (input.cols != n) throw DataError("agglomerate_complete: matrix is not square");
    if (n == 0) throw DataError("agglomerate_complete: empty matrix");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(input(i, j)))
                throw DataError("agglomerate_complete: non-finite entry at (" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
            if (input(i, j) != input(j, i))
                throw DataError("agglomerate_complete: asymmetric entry at (" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
        }

    Matrix d = input;
    std::vector<char> active(n, 1);
    std::vector<std::size_t> chain;
    chain.reserve(n);

    struct RawMerge {
        std::size_t a, b;  // slot indices at the time of merging
        double height;
    };
    std::vector<RawMerge> raw;
    raw.reserve(n - 1);

    std::size_t remaining = n;
    while (remaining > 1) {
        if (chain.empty()) {
            std::size_t first = 0;
            while (!active[first]) ++first;
            chain.push_back(first);
        }
        while (true) {
            const std::size_t tip = chain.back();
            const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : n;
            std::size_t best = n;
            double best_d = std::numeric_limits<double>::infinity();
            if (prev != n) {
                best = prev;
                best_d = d(tip, prev);
            }
            for (std::size_t k = 0; k < n; ++k) {
                if (!active[k] || k == tip) continue;
                if (d(tip, k) < best_d) {
                    best_d = d(tip, k);
                    best = k;
                }
            }
            if (best == prev) break;
            chain.push_back(best);
        }

        const std::size_t b = chain.back();
        chain.pop_back();
        const std::size_t a = chain.back();
        chain.pop_back();
        const std::size_t keep = std::min(a, b), drop = std::max(a, b);
        raw.push_back({keep, drop, d(a, b)});
        active[drop] = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == keep) continue;
            const double v = std::max(d(keep, k), d(drop, k));
            d(keep, k) = d(k, keep) = v;
        }
        --remaining;
    }

    std::stable_sort(raw.begin(), raw.end(), [](const RawMerge& x, const RawMerge& y) { return x.height < y.height; });

    Dendrogram out;
    out.leaves = n;
    out.merges.reserve(raw.size());
    UnionFind uf(n);
    std::vector<std::size_t> node_of(n), size_of(n, 1);
    std::iota(node_of.begin(), node_of.end(), 0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const std::size_t ra = uf.find(raw[i].a), rb = uf.find(raw[i].b);
        Merge m;
        m.left = std::min(node_of[ra], node_of[rb]);
        m.right = std::max(node_of[ra], node_of[rb]);
        m.height = raw[i].height;
        m.size = size_of[ra] + size_of[rb];
        const std::size_t root = uf.unite(ra, rb);
        node_of[root] = n + i;
        size_of[root] = m.size;
        out.merges.push_back(m);
    }
    return out;
}

ClusterAssignment cut_by_threshold(const Dendrogram& dg, double tau) {
    if (std::isnan(tau)) throw UsageError("cut_by_threshold: threshold is NaN");
    std::size_t count = 0;
    while (count < dg.merges.size() && dg.merges[count].height <= tau) ++count;
    return components(dg.leaves, dg.merges, count);
}

ClusterAssignment cut_by_count(const Dendrogram& dg, std::size_t q) {
    if (q < 1 || q > dg.leaves)
        throw UsageError("cut_by_count: cluster count " + std::to_string(q) + " outside [1, " +
                         std::to_string(dg.leaves) + "]");
    return components(dg.leaves, dg.merges, dg.leaves - q);
}

void write_dendrogram_csv(const Dendrogram& dg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "left,right,height,size\n";
    for (const auto& m : dg.merges)
        out << m.left << ',' << m.right << ',' << csv::format_double(m.height) << ',' << m.size << '\n';
}

}  // namespace mspl::cluster
