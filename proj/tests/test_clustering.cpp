#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "mspl/clustering.hpp"
#include "mspl/errors.hpp"
#include "oracles.hpp"

using namespace mspl;
using namespace mspl::cluster;

namespace {

Matrix to_matrix(const oracle::Dense& d) {
    Matrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.size(); ++j) m(i, j) = d[i][j];
    return m;
}

std::set<std::set<std::size_t>> partition_sets(const ClusterAssignment& a) { return oracle::as_sets(a.labels); }

}  // namespace

TEST_CASE("three points") {
    Matrix d(3, 3);
    d(0, 1) = d(1, 0) = 1;
    d(0, 2) = d(2, 0) = 10;
    d(1, 2) = d(2, 1) = 9;
    const auto dg = agglomerate_complete(d);
    REQUIRE(dg.merges.size() == 2);
    CHECK(dg.merges[0].height == 1.0);
    CHECK(dg.merges[0].left == 0);
    CHECK(dg.merges[0].right == 1);
    CHECK(dg.merges[1].height == 10.0);  // max, not min
    CHECK(dg.merges[1].size == 3);

    CHECK(cut_by_threshold(dg, 1.0).labels == std::vector<int>{0, 0, 1});  // inclusive
    CHECK(cut_by_threshold(dg, 0.999).labels == std::vector<int>{0, 1, 2});
    CHECK(cut_by_threshold(dg, 10.0).cluster_count() == 1);
    CHECK(cut_by_count(dg, 2).labels == std::vector<int>{0, 0, 1});
    CHECK(cut_by_count(dg, 3).labels == std::vector<int>{0, 1, 2});
    CHECK(cut_by_count(dg, 1).cluster_count() == 1);
    CHECK_THROWS_AS(cut_by_count(dg, 0), UsageError);
    CHECK_THROWS_AS(cut_by_count(dg, 4), UsageError);
}

TEST_CASE("small inputs") {
    CHECK(agglomerate_complete(Matrix(1, 1)).merges.empty());
    CHECK(cut_by_threshold(agglomerate_complete(Matrix(1, 1)), 1.0).labels == std::vector<int>{0});
    const auto z = agglomerate_complete(Matrix(4, 4));
    CHECK(z.merges.size() == 3);
    for (const auto& m : z.merges) CHECK(m.height == 0.0);
}

TEST_CASE("invalid matrices are rejected") {
    Matrix a(2, 2);
    a(0, 1) = 1;
    a(1, 0) = 2;
    CHECK_THROWS_AS(agglomerate_complete(a), DataError);
    Matrix b(2, 2);
    b(0, 1) = b(1, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(agglomerate_complete(b), DataError);
    CHECK_THROWS_AS(agglomerate_complete(Matrix(2, 3)), DataError);
}

TEST_CASE("matches the naive reference") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng() % 14;
        const auto d = oracle::random_symmetric(n, rng);
        const auto ref = oracle::complete_linkage(d);
        const auto dg = agglomerate_complete(to_matrix(d));
        REQUIRE(dg.merges.size() == n - 1);
        for (std::size_t k = 0; k + 1 < n; ++k) CHECK(std::abs(dg.merges[k].height - ref.heights[k]) <= 1e-12);
        for (int c = 0; c < 5; ++c) {
            const std::size_t q = 1 + rng() % n;
            CHECK(partition_sets(cut_by_count(dg, q)) == oracle::partition_after(ref, n, n - q));
            const double tau = std::uniform_real_distribution<double>(0, 10)(rng);
            const auto kept = static_cast<std::size_t>(
                std::count_if(ref.heights.begin(), ref.heights.end(), [&](double h) { return h <= tau; }));
            CHECK(partition_sets(cut_by_threshold(dg, tau)) == oracle::partition_after(ref, n, kept));
        }
    }
}

TEST_CASE("structural properties") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 3 + rng() % 30;
        auto d = oracle::random_symmetric(n, rng);
        const auto m = to_matrix(d);
        const auto dg = agglomerate_complete(m);
        for (std::size_t k = 1; k < dg.merges.size(); ++k) CHECK(dg.merges[k].height >= dg.merges[k - 1].height);
        CHECK(dg.merges.back().size == n);
        for (std::size_t k = 0; k < dg.merges.size(); ++k) CHECK(dg.merges[k].left < dg.merges[k].right);

        // Diameter of each threshold cluster stays within tau.
        const double tau = std::uniform_real_distribution<double>(0, 10)(rng);
        const auto cut = cut_by_threshold(dg, tau);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (cut.labels[i] == cut.labels[j]) CHECK(m(i, j) <= tau);

        // Nested cuts: fewer clusters is a coarsening.
        const auto fine = cut_by_count(dg, std::max<std::size_t>(1, n / 2));
        const auto coarse = cut_by_count(dg, std::max<std::size_t>(1, n / 4));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (fine.labels[i] == fine.labels[j]) CHECK(coarse.labels[i] == coarse.labels[j]);

        // Relabelling the samples permutes the partition.
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix pm(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) pm(i, j) = m(perm[i], perm[j]);
        const auto pdg = agglomerate_complete(pm);
        for (std::size_t k = 0; k < dg.merges.size(); ++k) CHECK(pdg.merges[k].height == dg.merges[k].height);
        const auto pcut = cut_by_threshold(pdg, tau);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                CHECK((pcut.labels[i] == pcut.labels[j]) == (cut.labels[perm[i]] == cut.labels[perm[j]]));
    }
}

TEST_CASE("label normalisation") {
    const std::vector<int> raw{7, 3, 7, -1, 3};
    CHECK(normalize_labels(raw).labels == std::vector<int>{0, 1, 0, 2, 1});
    CHECK(normalize_labels(raw).cluster_count() == 3);
}
