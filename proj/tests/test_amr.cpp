#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "mspl/amr.hpp"
#include "mspl/errors.hpp"

using namespace mspl;
using namespace mspl::amr;

namespace fs = std::filesystem;

namespace {

using S = AmrSymbol;

AmrProfile profile(std::string id, std::vector<AmrSymbol> l) { return {std::move(id), std::move(l)}; }

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("mspl_amr_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

}  // namespace

TEST_CASE("label similarity lookup") {
    const std::vector<AmrSymbol> all{S::S, S::I, S::R, S::one, S::zero, S::unknown};
    auto expected = [](AmrSymbol a, AmrSymbol b) {
        auto is = [&](AmrSymbol x, AmrSymbol y) { return (a == x && b == y) || (a == y && b == x); };
        return is(S::S, S::S) || is(S::S, S::zero) || is(S::zero, S::zero) || is(S::I, S::I) || is(S::I, S::one) ||
               is(S::R, S::R) || is(S::R, S::one) || is(S::one, S::one);
    };
    for (auto a : all)
        for (auto b : all) {
            CHECK(amr_label_similarity(a, b) == amr_label_similarity(b, a));
            CHECK(amr_label_similarity(a, b) == (expected(a, b) ? 1 : 0));
        }
    CHECK(amr_label_similarity(S::S, S::zero) == 1);
    CHECK(amr_label_similarity(S::unknown, S::unknown) == 0);
    CHECK(amr_label_similarity(S::S, S::R) == 0);
}

TEST_CASE("profile dissimilarity") {
    const auto p = profile("p", {S::one, S::S, S::unknown});
    const auto q = profile("q", {S::I, S::zero, S::R});
    CHECK(amr_dissimilarity(p, q) == 1);  // similarity 2 over 3 drugs

    const auto all_s = profile("a", std::vector<AmrSymbol>(33, S::S));
    const auto all_n = profile("n", std::vector<AmrSymbol>(33, S::unknown));
    CHECK(amr_dissimilarity(all_s, all_s) == 0);
    CHECK(amr_dissimilarity(all_n, all_s) == 33);
    CHECK(amr_dissimilarity(all_n, all_n) == 33);
    CHECK_THROWS_AS(amr_dissimilarity(p, all_s), DataError);
}

TEST_CASE("symbol parsing") {
    CHECK(parse_symbol("", "x") == S::unknown);
    CHECK(parse_symbol("N", "x") == S::unknown);
    CHECK(parse_symbol("1", "x") == S::one);
    CHECK(parse_symbol("0", "x") == S::zero);
    try {
        (void)parse_symbol("Q", "sample7");
        FAIL("expected rejection");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("'Q'") != std::string::npos);
        CHECK(msg.find("sample7") != std::string::npos);
    }
}

TEST_CASE("matrix from profiles") {
    const std::vector<AmrProfile> ps{profile("a", {S::S, S::R, S::I}), profile("b", {S::zero, S::one, S::R}),
                                     profile("c", {S::unknown, S::R, S::one})};
    const auto m = amr_matrix(ps);
    // hand: a-b sims 1+1+0, a-c 0+1+1, b-c 0+1+1
    CHECK(m(0, 1) == 1.0);
    CHECK(m(0, 2) == 1.0);
    CHECK(m(1, 2) == 1.0);
    CHECK_NOTHROW(m.validate());
    CHECK(amr_matrix({ps[0]}).values == Matrix(1, 1));

    const std::vector<AmrProfile> perm{ps[2], ps[0], ps[1]};
    const auto mp = amr_matrix(perm);
    const std::size_t idx[3] = {2, 0, 1};
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(mp(i, j) == m(idx[i], idx[j]));

    std::mt19937_64 rng(4);
    std::vector<AmrProfile> rand;
    for (int i = 0; i < 20; ++i) {
        AmrProfile p{std::to_string(i), {}};
        for (int d = 0; d < 33; ++d) p.labels.push_back(static_cast<AmrSymbol>(rng() % kAmrSymbolCount));
        rand.push_back(p);
    }
    const auto mr = amr_matrix(rand);
    for (double v : mr.values.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 33.0);
        CHECK(v == std::floor(v));
    }

    auto bad = ps;
    bad[1].labels.pop_back();
    try {
        (void)amr_matrix(bad);
        FAIL("expected rejection");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("(0, 1)") != std::string::npos);
    }
}

TEST_CASE("ground-truth derivation") {
    Matrix z(4, 4);
    CHECK(derive_gt_clusters({{"a", "b", "c", "d"}, z}, 10).cluster_count() == 1);

    Matrix block(6, 6);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j) block(i, j) = (i < 3) == (j < 3) ? 0.0 : 20.0;
    const auto gt = derive_gt_clusters({{"0", "1", "2", "3", "4", "5"}, block}, 10);
    CHECK(gt.labels == std::vector<int>{0, 0, 0, 1, 1, 1});
    CHECK(derive_gt_clusters({{"0", "1", "2", "3", "4", "5"}, block}, 25).cluster_count() == 1);
    CHECK_THROWS_AS(derive_gt_clusters({{"a"}, Matrix(1, 1)}, 0.0), UsageError);
}

TEST_CASE("paired loading") {
    const auto dir = scratch("load");
    write_text(dir / "features.csv", "id,species,f0,f1\nx,E. coli,1,2\ny,K. pneumoniae,3,4\nz,E. coli,5,6\n");
    write_text(dir / "amr.csv", "id,d0,d1\nz,S,R\nx,S,\ny,I,N\n");
    const auto pd = load_paired_dataset(dir / "features.csv", {dir / "amr.csv", StructureSource::Kind::amr_profiles},
                                        DatasetKind::amr);
    const auto& d = pd.dataset;
    CHECK(d.label_names == std::vector<std::string>{"E. coli", "K. pneumoniae"});
    CHECK(d.labels == std::vector<int>{0, 1, 0});
    CHECK(pd.num_drugs == 2);
    // Reordered to the features file: x = [S, N], y = [I, N], z = [S, R].
    CHECK(d.dissimilarity(0, 2) == 1.0);
    CHECK(d.dissimilarity(0, 1) == 2.0);
    CHECK(d.features(2, 1) == 6.0);

    write_text(dir / "amr_missing.csv", "id,d0,d1\nz,S,R\nx,S,S\n");
    CHECK_THROWS_WITH_AS(load_paired_dataset(dir / "features.csv",
                                             {dir / "amr_missing.csv", StructureSource::Kind::amr_profiles},
                                             DatasetKind::amr),
                         doctest::Contains("missing id 'y'"), DataError);

    write_text(dir / "amr_bad.csv", "id,d0,d1\nz,S,R\nx,S,Q\ny,S,S\n");
    CHECK_THROWS_WITH_AS(load_paired_dataset(dir / "features.csv",
                                             {dir / "amr_bad.csv", StructureSource::Kind::amr_profiles},
                                             DatasetKind::amr),
                         doctest::Contains(":3:"), DataError);

    write_text(dir / "bad_features.csv", "id,species,f0\nx,a,1\ny,a,oops\n");
    write_text(dir / "d.csv", "id,x,y\nx,0,1\ny,1,0\n");
    CHECK_THROWS_AS(load_paired_dataset(dir / "bad_features.csv", {dir / "d.csv"}, DatasetKind::snp), DataError);

    write_text(dir / "good_features.csv", "id,species,f0\ny,a,1\nx,b,2\n");
    const auto snp = load_paired_dataset(dir / "good_features.csv", {dir / "d.csv"}, DatasetKind::snp);
    CHECK(snp.dataset.ids == std::vector<std::string>{"y", "x"});
    CHECK(snp.dataset.dissimilarity(0, 1) == 1.0);
    fs::remove_all(dir);
}

TEST_CASE("amr csv round trip") {
    const auto dir = scratch("rt");
    const std::vector<AmrProfile> ps{profile("a", {S::S, S::R, S::unknown}), profile("b", {S::zero, S::one, S::I})};
    write_amr_csv(ps, {"d0", "d1", "d2"}, dir / "amr.csv");
    const auto back = read_amr_csv(dir / "amr.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[0].labels == ps[0].labels);
    CHECK(back[1].labels == ps[1].labels);
    CHECK(back[1].id == "b");
    fs::remove_all(dir);
}
