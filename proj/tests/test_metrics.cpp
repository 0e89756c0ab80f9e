#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "mspl/errors.hpp"
#include "mspl/mds.hpp"
#include "mspl/metrics.hpp"
#include "oracles.hpp"

using namespace mspl;
using namespace mspl::metrics;

namespace {

std::vector<int> random_partition(std::size_t n, int max_k, std::mt19937_64& rng) {
    const int k = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_k));
    std::vector<int> out(n);
    for (auto& v : out) v = static_cast<int>(rng() % static_cast<std::uint64_t>(k));
    return out;
}

double dist(const Matrix& c, std::size_t i, std::size_t j) {
    double s = 0;
    for (std::size_t k = 0; k < c.cols; ++k) s += (c(i, k) - c(j, k)) * (c(i, k) - c(j, k));
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("purity") {
    const std::vector<int> labels{0, 0, 1, 1, 1, 2};
    const std::vector<std::size_t> a{0, 1, 2};
    CHECK(purity(a, labels) == doctest::Approx(2.0 / 3.0));
    const std::vector<std::size_t> b{5};
    CHECK(purity(b, labels) == 1.0);
    CHECK_THROWS_AS(purity(std::vector<std::size_t>{}, labels), UsageError);
}

TEST_CASE("precision and recall extremes") {
    const std::vector<int> gt{0, 0, 0, 1, 1, 2, 2, 2};
    std::vector<int> singletons(gt.size());
    std::iota(singletons.begin(), singletons.end(), 0);
    const std::vector<int> one(gt.size(), 0);
    CHECK(cluster_prf_unfiltered(singletons, gt).precision == 1.0);
    CHECK(cluster_prf_unfiltered(one, gt).recall == 1.0);
    const auto same = cluster_prf_unfiltered(gt, gt);
    CHECK(same.precision == 1.0);
    CHECK(same.recall == 1.0);
    CHECK(same.f1 == 1.0);
}

TEST_CASE("filtered prf drops singleton ground truth") {
    const std::vector<int> gt{0, 0, 1, 2, 2};
    const std::vector<int> pred{0, 0, 0, 1, 1};
    CHECK(non_singleton_indices(gt) == std::vector<std::size_t>{0, 1, 3, 4});
    const auto r = cluster_prf(pred, gt);
    REQUIRE(r);
    CHECK(r->precision == 1.0);
    CHECK(r->recall == 1.0);
    CHECK_FALSE(cluster_prf(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2}));
    CHECK_THROWS_AS(cluster_prf(std::vector<int>{0, 1}, std::vector<int>{0, 1, 1}), UsageError);

    const auto rep = evaluate_partition(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2});
    CHECK_FALSE(rep.f1);
    CHECK_FALSE(rep.ari);
    CHECK(rep.n_evaluated_samples == 0);
}

TEST_CASE("random partitions against oracles") {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + rng() % 11;
        const auto a = random_partition(n, 5, rng);
        const auto b = random_partition(n, 5, rng);
        CHECK(adjusted_rand_index(a, b) == doctest::Approx(oracle::ari_pairs(a, b)).epsilon(1e-12));
        CHECK(normalized_mutual_information(a, b) ==
              doctest::Approx(std::clamp(oracle::nmi_entropy(a, b), 0.0, 1.0)).epsilon(1e-12));
        const auto prf = cluster_prf_unfiltered(a, b);
        const auto [p, r] = oracle::prf_direct(a, b);
        CHECK(prf.precision == doctest::Approx(p).epsilon(1e-14));
        CHECK(prf.recall == doctest::Approx(r).epsilon(1e-14));
        CHECK(prf.f1 == doctest::Approx(2 * p * r / (p + r)).epsilon(1e-14));

        // Duality and ranges.
        const auto swapped = cluster_prf_unfiltered(b, a);
        CHECK(swapped.recall == prf.precision);
        CHECK(prf.precision > 0.0);
        CHECK(prf.precision <= 1.0);
        CHECK(normalized_mutual_information(a, b) >= 0.0);
        CHECK(normalized_mutual_information(a, b) <= 1.0);
        CHECK(adjusted_rand_index(a, b) <= 1.0);

        // Renaming clusters changes nothing.
        auto renamed = a;
        for (auto& v : renamed) v = 100 - 3 * v;
        CHECK(adjusted_rand_index(renamed, b) == doctest::Approx(adjusted_rand_index(a, b)).epsilon(1e-14));
        CHECK(normalized_mutual_information(renamed, b) ==
              doctest::Approx(normalized_mutual_information(a, b)).epsilon(1e-14));
        CHECK(cluster_prf_unfiltered(renamed, b).f1 == prf.f1);

        const auto rep = evaluate_partition(a, b);
        if (rep.f1) CHECK(*rep.f1 == doctest::Approx(2 * *rep.precision * *rep.recall / (*rep.precision + *rep.recall)));
    }
}

TEST_CASE("ari and nmi examples") {
    const std::vector<int> a{0, 0, 1, 1, 2, 2};
    CHECK(adjusted_rand_index(a, a) == 1.0);
    CHECK(normalized_mutual_information(a, a) == doctest::Approx(1.0));
    // 2x2 product structure on 4k samples: independent.
    std::vector<int> x, y;
    for (int k = 0; k < 10; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                x.push_back(i);
                y.push_back(j);
            }
    CHECK(std::abs(normalized_mutual_information(x, y)) <= 1e-12);
    const std::vector<int> p{0, 0, 0, 1, 1, 1}, q{0, 0, 1, 1, 2, 2};
    CHECK(normalized_mutual_information(p, q) == doctest::Approx(oracle::nmi_entropy(p, q)).epsilon(1e-12));
}

TEST_CASE("entropy and lift") {
    CHECK(shannon_entropy(std::vector<int>{3, 3, 3}) == 0.0);
    CHECK(shannon_entropy(std::vector<int>{0, 1, 2, 3}) == doctest::Approx(std::log(4.0)));
    CHECK(shannon_entropy(std::vector<int>{0, 0, 1, 2}) == doctest::Approx(1.0397).epsilon(1e-4));
    CHECK_THROWS_AS(shannon_entropy(std::vector<int>{}), UsageError);
    CHECK(*lift(0.5, 0.5) == 1.0);
    CHECK(*lift(0.6, 0.5) == doctest::Approx(1.2));
    CHECK_FALSE(lift(0.6, 0.0));

    // Two-species toy: per-species F1 on each species subset, then the ratio.
    const std::vector<int> gt{0, 0, 1, 1, 2, 2, 3, 3};
    const std::vector<int> model{0, 0, 1, 1, 2, 2, 3, 3};
    const std::vector<int> base{0, 0, 0, 0, 1, 2, 3, 3};
    const std::vector<int> species{0, 0, 0, 0, 1, 1, 1, 1};
    for (int s = 0; s < 2; ++s) {
        std::vector<int> g, m, b;
        for (std::size_t i = 0; i < gt.size(); ++i)
            if (species[i] == s) {
                g.push_back(gt[i]);
                m.push_back(model[i]);
                b.push_back(base[i]);
            }
        const double fm = cluster_prf(m, g)->f1, fb = cluster_prf(b, g)->f1;
        const auto [pb, rb] = oracle::prf_direct(b, g);
        CHECK(fb == doctest::Approx(2 * pb * rb / (pb + rb)));
        CHECK(*lift(fm, fb) == doctest::Approx(1.0 / (2 * pb * rb / (pb + rb))));
    }
}

TEST_CASE("metric report json keeps nulls") {
    MetricReport r;
    r.f1 = 0.5;
    nlohmann::json j = r;
    CHECK(j["ari"].is_null());
    CHECK(j["f1"] == 0.5);
    const auto back = j.get<MetricReport>();
    CHECK_FALSE(back.ari);
    CHECK(*back.f1 == 0.5);
}

TEST_CASE("classical mds") {
    Matrix two(2, 2);
    two(0, 1) = two(1, 0) = 2;
    const auto c2 = classical_mds(two);
    CHECK(std::abs(c2(0, 0)) == doctest::Approx(1.0));
    CHECK(c2(0, 0) == doctest::Approx(-c2(1, 0)));
    CHECK(c2(0, 1) == doctest::Approx(0.0));

    const auto cz = classical_mds(Matrix(3, 3));
    for (double v : cz.values) CHECK(v == 0.0);

    const std::vector<std::vector<double>> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    const auto ds = oracle::pdist(square);
    Matrix m(4, 4);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) m(i, j) = ds[i][j];
    const auto cs = classical_mds(m);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(dist(cs, i, j) - ds[i][j]) < 1e-6);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<std::vector<double>> pts(12, std::vector<double>(2));
    for (auto& p : pts) p = {3 * g(rng), g(rng)};
    const auto dp = oracle::pdist(pts);
    Matrix mp(12, 12);
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = 0; j < 12; ++j) mp(i, j) = dp[i][j];
    const auto cp = classical_mds(mp);
    for (std::size_t i = 0; i < 12; ++i)
        for (std::size_t j = 0; j < 12; ++j) CHECK(std::abs(dist(cp, i, j) - dp[i][j]) < 1e-6);
    CHECK(classical_mds(mp) == cp);
}
