#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "mspl/csv.hpp"
#include "mspl/errors.hpp"
#include "mspl/harness.hpp"
#include "mspl/report.hpp"
#include "mspl/synth_ts.hpp"
#include "oracles.hpp"

using namespace mspl;
using namespace mspl::harness;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("mspl_harness_" + name);
    fs::remove_all(d);
    return d;
}

const Dataset& tiny_synth() {
    static const Dataset d = [] {
        synth::SynthConfig c;
        c.m = 2;
        c.n = 4;
        c.seed = 3;
        return synth::build_dataset(c).dataset;
    }();
    return d;
}

ExperimentConfig tiny_config() {
    ExperimentConfig c = default_config(DatasetKind::synth);
    c.model.depth = 2;
    c.model.channels = {2, 3};
    c.model.hidden_dim = 8;
    c.model.latent_dim = 4;
    c.train.epochs = 2;
    c.train.batch_size = 8;
    c.n_trials = 2;
    c.write_mds = true;
    return c;
}

// Best F1 over a dense grid of thresholds, straight from the definitions.
double grid_best_f1(const Matrix& h, const std::vector<int>& gt, double upper) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < gt.size(); ++i)
        if (std::count(gt.begin(), gt.end(), gt[i]) > 1) keep.push_back(i);
    std::vector<std::vector<double>> rows;
    std::vector<int> g;
    for (auto i : keep) {
        rows.emplace_back(h.row(i).begin(), h.row(i).end());
        g.push_back(gt[i]);
    }
    const auto dg = oracle::complete_linkage(oracle::pdist(rows));
    double best = 0;
    for (int s = 0; s <= 10000; ++s) {
        const double tau = upper * s / 10000.0;
        const auto kept = static_cast<std::size_t>(
            std::count_if(dg.heights.begin(), dg.heights.end(), [&](double x) { return x <= tau; }));
        const auto part = oracle::partition_after(dg, rows.size(), kept);
        std::vector<int> pred(rows.size());
        int id = 0;
        for (const auto& grp : part) {
            for (auto i : grp) pred[i] = id;
            ++id;
        }
        const auto [p, r] = oracle::prf_direct(pred, g);
        best = std::max(best, 2 * p * r / (p + r));
    }
    return best;
}

}  // namespace

TEST_CASE("fold splitting") {
    for (std::size_t n : {10u, 11u, 37u}) {
        for (std::size_t k : {2u, 3u, 5u}) {
            const auto folds = split_folds(n, k, 9);
            REQUIRE(folds.size() == k);
            std::set<std::size_t> all;
            std::size_t lo = n, hi = 0;
            for (const auto& f : folds) {
                CHECK(std::is_sorted(f.begin(), f.end()));
                lo = std::min(lo, f.size());
                hi = std::max(hi, f.size());
                all.insert(f.begin(), f.end());
            }
            CHECK(all.size() == n);
            CHECK(hi - lo <= 1);
        }
    }
    CHECK(split_folds(20, 2, 1) == split_folds(20, 2, 1));
    CHECK(split_folds(20, 2, 1) != split_folds(20, 2, 2));
    CHECK_THROWS_AS(split_folds(3, 5, 0), UsageError);
}

TEST_CASE("seed derivation") {
    CHECK(derive_seed(1, 0, 0) == derive_seed(1, 0, 0));
    std::set<std::uint64_t> s;
    for (std::uint64_t t = 0; t < 5; ++t)
        for (std::uint64_t f = 0; f < 5; ++f)
            for (std::uint64_t k = 0; k < 2; ++k) s.insert(derive_seed(t, f, k));
    CHECK(s.size() == 50);
}

TEST_CASE("threshold tuning") {
    // Two tight groups far apart: any threshold inside the gap is perfect, the smallest wins.
    Matrix h(6, 1);
    const double xs[6] = {0.0, 0.1, 0.2, 10.0, 10.1, 10.3};
    for (std::size_t i = 0; i < 6; ++i) h(i, 0) = xs[i];
    const std::vector<int> gt{0, 0, 0, 1, 1, 1};
    const auto r = tune_threshold(h, gt, 20.0);
    CHECK(r.f1 == 1.0);
    CHECK(r.threshold == doctest::Approx(0.3));
    CHECK_FALSE(r.warning);

    const auto low = tune_threshold(h, gt, 0.05);
    CHECK(low.warning);
    CHECK(low.threshold == 0.05);
    CHECK(low.candidates == 1);

    CHECK_THROWS_AS(tune_threshold(h, std::vector<int>{0, 1, 2, 3, 4, 5}, 1.0), DataError);
    CHECK_THROWS_AS(tune_threshold(h, std::vector<int>{0, 0}, 1.0), UsageError);

    std::mt19937_64 rng(12);
    std::normal_distribution<double> g;
    for (int t = 0; t < 5; ++t) {
        Matrix x(14, 2);
        std::vector<int> labels(14);
        for (std::size_t i = 0; i < 14; ++i) {
            labels[i] = static_cast<int>(i % 4);
            x(i, 0) = 2.0 * labels[i] + g(rng);
            x(i, 1) = g(rng);
        }
        const auto tr = tune_threshold(x, labels, 6.0);
        CHECK(tr.f1 >= grid_best_f1(x, labels, 6.0) - 1e-12);
    }
}

TEST_CASE("confidence interval") {
    const std::vector<double> v{1, 2, 3, 4, 5};
    const auto ci = aggregate_ci(v);
    CHECK(ci.mean == 3.0);
    REQUIRE(ci.half_width);
    CHECK(*ci.half_width == doctest::Approx(1.963).epsilon(1e-3));
    CHECK_FALSE(aggregate_ci(std::vector<double>{2.0}).half_width);
    CHECK(*aggregate_ci(std::vector<double>{2.0, 2.0, 2.0}).half_width == 0.0);
    CHECK_THROWS_AS(aggregate_ci(std::vector<double>{}), UsageError);
}

TEST_CASE("config json round trip") {
    auto c = tiny_config();
    c.schemes = {Scheme::thr, Scheme::num};
    c.gt_threshold = 4.5;
    c.paths.synth_dir = "somewhere";
    nlohmann::json j = c;
    const auto back = config_from_json(j);
    nlohmann::json j2 = back;
    CHECK(j == j2);
    const auto partial = config_from_json(nlohmann::json{{"kind", "amr"}, {"model", {{"lambda1", 0.5}}}});
    CHECK(partial.k_folds == 5);
    CHECK(partial.threshold_upper_bound == 33.0);
    CHECK(partial.model.lambda1 == 0.5);
    CHECK(partial.model.hidden_dim == 256);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"kind", "bogus"}}), UsageError);
    CHECK_THROWS_AS(config_from_json(nlohmann::json{{"k_folds", "two"}}), UsageError);

    const auto snp = default_config(DatasetKind::snp);
    CHECK(snp.model.struct_loss == model::StructLossKind::snp);
    CHECK(*snp.gt_threshold == 15.0);
}

TEST_CASE("end-to-end run, artifacts and report") {
    const auto dir = scratch("e2e");
    auto cfg = tiny_config();
    const auto& data = tiny_synth();
    const auto res = run_experiment(cfg, data, dir / "run");
    REQUIRE(res.folds.size() == 2 * 2 * 3);
    for (const auto& f : res.folds) {
        CHECK_FALSE(f.error);
        CHECK(f.trial_seed == f.trial);
        CHECK(f.model_seed == derive_seed(f.trial_seed, f.fold, 0));
        const Scheme s = f.variant == model::Variant::cluscls ? Scheme::cls : Scheme::num;
        REQUIRE(f.reports.count(s));
        const auto& rep = f.reports.at(s);
        REQUIRE(rep.f1);
        CHECK(*rep.f1 == doctest::Approx(2 * *rep.precision * *rep.recall / (*rep.precision + *rep.recall)));
        CHECK(rep.n_predicted_clusters >= 1);
        if (s == Scheme::num) CHECK(rep.n_predicted_clusters == rep.n_gt_clusters);
        const auto fd = dir / "run" / ("trial_" + std::to_string(f.trial)) / ("fold_" + std::to_string(f.fold)) /
                        model::to_string(f.variant);
        CHECK(fs::exists(fd / "model.ckpt"));
        CHECK(fs::exists(fd / "metrics.json"));
        CHECK(fs::exists(fd / "embedding_val.csv"));
        CHECK(fs::exists(fd / "mds.csv"));
        CHECK(fs::exists(fd / (std::string("clusters_") + to_string(s) + ".csv")));
    }
    CHECK(fs::exists(dir / "run" / "experiment.json"));

    // Same seeds, same numbers.
    const auto again = run_experiment(cfg, data);
    for (std::size_t i = 0; i < res.folds.size(); ++i)
        CHECK(nlohmann::json(res.folds[i]) == nlohmann::json(again.folds[i]));

    // Report: row identity, audit against fold records, idempotence.
    report::emit_report(res, dir / "rep1", dir / "run");
    report::emit_report(res, dir / "rep2", dir / "run");
    report::emit_report(report::load_results(dir / "run"), dir / "rep3", dir / "run");
    for (const char* f : {"table1.csv", "lift.csv", "species_f1.csv", "aggregate.json", "run_manifest.json", "mds.csv"}) {
        CHECK(fs::exists(dir / "rep1" / f));
        CHECK(slurp(dir / "rep1" / f) == slurp(dir / "rep2" / f));
        CHECK(slurp(dir / "rep1" / f) == slurp(dir / "rep3" / f));
    }

    const auto agg = report::aggregate(res);
    CHECK(agg.completed_trials == std::vector<std::size_t>{0, 1});
    for (const auto& row : agg.rows) {
        const auto& m = row.metrics;
        const double p = m.at("precision").interval->mean, r = m.at("recall").interval->mean;
        CHECK(m.at("f1").interval->mean == doctest::Approx(2 * p * r / (p + r)).epsilon(1e-12));
        for (std::size_t t = 0; t < 2; ++t) {
            double sum = 0;
            int cnt = 0;
            for (const auto& f : res.folds)
                if (f.trial == t && f.variant == row.variant && f.reports.count(row.scheme) &&
                    f.reports.at(row.scheme).precision) {
                    sum += *f.reports.at(row.scheme).precision;
                    ++cnt;
                }
            CHECK(*m.at("precision").per_trial[t] == doctest::Approx(sum / cnt).epsilon(1e-12));
        }
    }

    const auto table = csv::read(dir / "rep1" / "table1.csv");
    CHECK(table.rows.size() == 3);
    for (const auto& row : table.rows) {
        const double p = std::stod(row.fields[table.column("precision")]);
        const double r = std::stod(row.fields[table.column("recall")]);
        const double f = std::stod(row.fields[table.column("f1")]);
        CHECK(f == doctest::Approx(2 * p * r / (p + r)).epsilon(1e-12));
    }

    // Lift recomputed from species_f1.csv.
    const auto sf = csv::read(dir / "rep1" / "species_f1.csv");
    const auto lift = csv::read(dir / "rep1" / "lift.csv");
    for (const auto& lr : lift.rows) {
        const auto& species = lr.fields[lift.column("species")];
        auto f1_of = [&](const std::string& model) -> std::optional<double> {
            for (const auto& r : sf.rows)
                if (r.fields[sf.column("species")] == species && r.fields[sf.column("model")] == model) {
                    const auto& v = r.fields[sf.column("mean_f1")];
                    if (v.empty()) return std::nullopt;
                    return std::stod(v);
                }
            return std::nullopt;
        };
        const auto a = f1_of("mspl"), b = f1_of("onlycls");
        const auto& cell = lr.fields[lift.column("lift_vs_onlycls")];
        if (a && b && *b > 0)
            CHECK(std::stod(cell) == doctest::Approx(*a / *b).epsilon(1e-12));
        else
            CHECK(cell.empty());
    }
    fs::remove_all(dir);
}

TEST_CASE("structure weight zero matches the baseline") {
    auto cfg = tiny_config();
    cfg.n_trials = 1;
    cfg.write_checkpoints = false;
    cfg.write_mds = false;
    cfg.model.lambda1 = 0.0;
    cfg.variants = {model::Variant::mspl, model::Variant::onlycls};
    const auto res = run_experiment(cfg, tiny_synth());
    for (std::size_t i = 0; i < res.folds.size(); i += 2) {
        REQUIRE(res.folds[i].variant == model::Variant::mspl);
        auto a = nlohmann::json(res.folds[i]), b = nlohmann::json(res.folds[i + 1]);
        a.erase("variant");
        b.erase("variant");
        CHECK(a == b);
    }
}

TEST_CASE("parallel jobs give the same results") {
    auto cfg = tiny_config();
    cfg.write_checkpoints = false;
    cfg.write_mds = false;
    cfg.variants = {model::Variant::mspl, model::Variant::cluscls};
    const auto serial = run_experiment(cfg, tiny_synth());
    cfg.jobs = 2;
    const auto parallel = run_experiment(cfg, tiny_synth());
    REQUIRE(serial.folds.size() == parallel.folds.size());
    for (std::size_t i = 0; i < serial.folds.size(); ++i)
        CHECK(nlohmann::json(serial.folds[i]) == nlohmann::json(parallel.folds[i]));
}

TEST_CASE("threshold scheme on a paired dataset") {
    // Dissimilarity from a 1-d coordinate; gt from a cut at 15.
    auto data = tiny_synth();
    data.kind = DatasetKind::snp;
    data.gt_clusters.reset();
    for (std::size_t i = 0; i < data.size(); ++i)
        for (std::size_t j = 0; j < data.size(); ++j)
            data.dissimilarity.values(i, j) = 10.0 * std::abs(static_cast<double>(i / 8) - static_cast<double>(j / 8));
    auto cfg = default_config(DatasetKind::snp);
    const auto base = tiny_config();
    cfg.model.depth = base.model.depth;
    cfg.model.channels = base.model.channels;
    cfg.model.hidden_dim = base.model.hidden_dim;
    cfg.model.latent_dim = base.model.latent_dim;
    cfg.train = base.train;
    cfg.n_trials = 1;
    cfg.variants = {model::Variant::mspl};
    cfg.write_checkpoints = false;
    cfg.write_mds = false;
    const auto gt = ground_truth(data, cfg.gt_threshold);
    CHECK(*std::max_element(gt.begin(), gt.end()) == 1);  // {0,1}, {2,3}
    const auto res = run_experiment(cfg, data);
    for (const auto& f : res.folds) {
        CHECK_FALSE(f.error);
        REQUIRE(f.tuning);
        CHECK(f.tuning->threshold <= 20.0);
        CHECK(f.reports.count(Scheme::thr));
        CHECK(f.tuning_input_hash.size() == 16);
    }
}

TEST_CASE("bad configurations are rejected") {
    auto cfg = tiny_config();
    cfg.k_folds = 1;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = tiny_config();
    cfg.variants.clear();
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = tiny_config();
    cfg.schemes = {Scheme::thr};
    cfg.threshold_upper_bound = -1;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
}
