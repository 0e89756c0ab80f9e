// mspl command line: data generation, ingestion, training, cross-validation
// and evaluation utilities. Exit codes: 0 ok, 1 usage, 2 data, 3 numerical.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "mspl/amr.hpp"
#include "mspl/clustering.hpp"
#include "mspl/csv.hpp"
#include "mspl/errors.hpp"
#include "mspl/harness.hpp"
#include "mspl/mds.hpp"
#include "mspl/metrics.hpp"
#include "mspl/report.hpp"
#include "mspl/synth_ts.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

// Flags shared by every subcommand that builds an ExperimentConfig. Each set
// flag overwrites the matching field of the JSON document.
struct ConfigFlags {
    std::string config_path;
    std::optional<std::string> kind, synth_dir, features, amr, dissim, variants, schemes, struct_loss;
    std::optional<std::size_t> epochs, batch_size, k_folds, trials, latent_dim, jobs;
    std::optional<std::uint64_t> seed;
    std::optional<double> lr, upper_bound, gt_threshold, lambda0, lambda1, snp_threshold;
    bool no_checkpoints = false, no_mds = false;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "JSON experiment config");
        app->add_option("--kind", kind, "dataset kind: synth, snp or amr");
        app->add_option("--synth-dir", synth_dir, "Synth-TS directory");
        app->add_option("--features", features, "features.csv");
        app->add_option("--amr", amr, "amr.csv with resistance profiles");
        app->add_option("--dissim", dissim, "precomputed dissim.csv");
        app->add_option("--variants", variants, "comma list of mspl, onlycls, cluscls");
        app->add_option("--schemes", schemes, "comma list of thr, num");
        app->add_option("--struct-loss", struct_loss, "mse or snp");
        app->add_option("--epochs", epochs);
        app->add_option("--batch-size", batch_size);
        app->add_option("--lr", lr, "learning rate");
        app->add_option("--k-folds", k_folds);
        app->add_option("--trials", trials);
        app->add_option("--seed", seed, "base seed");
        app->add_option("--latent-dim", latent_dim);
        app->add_option("--upper-bound", upper_bound, "threshold upper bound for thr");
        app->add_option("--gt-threshold", gt_threshold, "complete-linkage cut for ground truth");
        app->add_option("--lambda0", lambda0);
        app->add_option("--lambda1", lambda1);
        app->add_option("--snp-threshold", snp_threshold);
        app->add_option("--jobs", jobs, "parallel fold jobs");
        app->add_flag("--no-checkpoints", no_checkpoints);
        app->add_flag("--no-mds", no_mds);
    }

    mspl::harness::ExperimentConfig build() const {
        json j = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw mspl::UsageError("cannot read config " + config_path);
            try {
                in >> j;
            } catch (const json::exception& e) {
                throw mspl::UsageError(config_path + ": " + e.what());
            }
        }
        if (kind) j["kind"] = *kind;
        if (synth_dir) j["paths"]["synth_dir"] = *synth_dir;
        if (features) j["paths"]["features"] = *features;
        if (amr) j["paths"]["amr"] = *amr;
        if (dissim) j["paths"]["dissim"] = *dissim;
        if (variants) j["variants"] = split_list(*variants);
        if (schemes) j["schemes"] = split_list(*schemes);
        if (struct_loss) j["model"]["struct_loss"] = *struct_loss;
        if (epochs) j["train"]["epochs"] = *epochs;
        if (batch_size) j["train"]["batch_size"] = *batch_size;
        if (lr) j["train"]["learning_rate"] = *lr;
        if (k_folds) j["k_folds"] = *k_folds;
        if (trials) j["n_trials"] = *trials;
        if (seed) j["base_seed"] = *seed;
        if (latent_dim) j["model"]["latent_dim"] = *latent_dim;
        if (upper_bound) j["threshold_upper_bound"] = *upper_bound;
        if (gt_threshold) j["gt_threshold"] = *gt_threshold;
        if (lambda0) j["model"]["lambda0"] = *lambda0;
        if (lambda1) j["model"]["lambda1"] = *lambda1;
        if (snp_threshold) j["model"]["snp_threshold"] = *snp_threshold;
        if (jobs) j["jobs"] = *jobs;
        if (no_checkpoints) j["write_checkpoints"] = false;
        if (no_mds) j["write_mds"] = false;
        auto c = mspl::harness::config_from_json(j);
        c.validate();
        return c;
    }
};

int exit_code_for(const std::string& error) {
    if (error.rfind("usage:", 0) == 0) return 1;
    if (error.rfind("numerical:", 0) == 0) return 3;
    return 2;
}

void print_json(const json& j, const std::string& out) {
    if (out.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        std::ofstream f(out);
        if (!f) throw mspl::DataError("cannot write " + out);
        f << j.dump(2) << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multimodal structure preservation learning"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a Synth-TS dataset");
    mspl::synth::SynthConfig sc;
    std::string synth_out, triangle = "verbatim";
    synth->add_option("--m", sc.m, "grid side")->capture_default_str();
    synth->add_option("--n", sc.n, "samples per wave type per Gaussian")->capture_default_str();
    synth->add_option("--mu0", sc.mu0)->capture_default_str();
    synth->add_option("--sigma-f", sc.sigma_f)->capture_default_str();
    synth->add_option("--sigma-k", sc.sigma_k)->capture_default_str();
    synth->add_option("--sigma-n", sc.sigma_n)->capture_default_str();
    synth->add_option("--offset", sc.offset)->capture_default_str();
    synth->add_option("--seed", sc.seed)->capture_default_str();
    synth->add_option("--triangle", triangle, "verbatim or continuous")->capture_default_str();
    synth->add_option("--out", synth_out, "output directory")->required();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "validate a paired dataset and build its dissimilarity matrix");
    std::string ing_features, ing_amr, ing_dissim, ing_kind = "amr", ing_out;
    std::optional<double> ing_threshold;
    ingest->add_option("--features", ing_features, "features.csv (id, species, f0..)")->required();
    ingest->add_option("--amr", ing_amr, "amr.csv resistance profiles");
    ingest->add_option("--dissim", ing_dissim, "precomputed dissim.csv");
    ingest->add_option("--kind", ing_kind, "snp or amr")->capture_default_str();
    ingest->add_option("--gt-threshold", ing_threshold, "ground-truth cut (default 10 amr, 15 snp)");
    ingest->add_option("--out", ing_out, "output directory")->required();

    // train
    auto* train = app.add_subcommand("train", "train one variant on one split");
    ConfigFlags train_flags;
    train_flags.attach(train);
    std::string train_variant = "mspl", train_out;
    std::size_t train_trial = 0, train_fold = 0;
    train->add_option("--variant", train_variant)->capture_default_str();
    train->add_option("--trial", train_trial)->capture_default_str();
    train->add_option("--fold", train_fold)->capture_default_str();
    train->add_option("--out", train_out, "output directory")->required();

    // crossval
    auto* crossval = app.add_subcommand("crossval", "run the full cross-validation protocol");
    ConfigFlags cv_flags;
    cv_flags.attach(crossval);
    std::string cv_out;
    bool cv_quiet = false;
    crossval->add_option("--out", cv_out, "output directory")->required();
    crossval->add_flag("--quiet", cv_quiet, "no progress lines");

    // tune-threshold
    auto* tune = app.add_subcommand("tune-threshold", "pick the F1-optimal distance threshold");
    std::string tune_features, tune_gt, tune_out;
    double tune_bound = 20.0;
    tune->add_option("--features", tune_features, "embedding csv (id, h0..)")->required();
    tune->add_option("--gt", tune_gt, "gt clusters csv (id, cluster_id)")->required();
    tune->add_option("--upper-bound", tune_bound)->capture_default_str();
    tune->add_option("--out", tune_out, "write JSON here instead of stdout");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "score predicted clusters against ground truth");
    std::string ev_pred, ev_gt, ev_out;
    evaluate->add_option("--pred", ev_pred, "predicted clusters csv")->required();
    evaluate->add_option("--gt", ev_gt, "gt clusters csv")->required();
    evaluate->add_option("--out", ev_out, "write JSON here instead of stdout");

    // mds
    auto* mds = app.add_subcommand("mds", "2-D classical MDS coordinates");
    std::string mds_dissim, mds_features, mds_out;
    mds->add_option("--dissim", mds_dissim, "dissimilarity csv");
    mds->add_option("--features", mds_features, "embedding csv; distances are Euclidean");
    mds->add_option("--out", mds_out, "mds.csv")->required();

    // report
    auto* report = app.add_subcommand("report", "rebuild report files from a crossval directory");
    std::string rep_run, rep_out;
    report->add_option("--run", rep_run, "crossval output directory")->required();
    report->add_option("--out", rep_out, "report directory (default: the run directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*synth) {
            if (triangle == "verbatim")
                sc.triangle = mspl::synth::TriangleFormula::verbatim;
            else if (triangle == "continuous")
                sc.triangle = mspl::synth::TriangleFormula::continuous;
            else
                throw mspl::UsageError("--triangle must be verbatim or continuous");
            const auto data = mspl::synth::build_dataset(sc);
            mspl::synth::write_synth_dataset(data, synth_out);
            std::cout << "wrote " << data.samples.size() << " series to " << synth_out << '\n';
        } else if (*ingest) {
            const auto kind = mspl::dataset_kind_from_string(ing_kind);
            if (kind == mspl::DatasetKind::synth) throw mspl::UsageError("ingest handles snp and amr data");
            if (ing_amr.empty() == ing_dissim.empty()) throw mspl::UsageError("give exactly one of --amr, --dissim");
            mspl::amr::StructureSource src;
            src.path = ing_amr.empty() ? ing_dissim : ing_amr;
            src.kind = ing_amr.empty() ? mspl::amr::StructureSource::Kind::dissimilarity
                                       : mspl::amr::StructureSource::Kind::amr_profiles;
            auto paired = mspl::amr::load_paired_dataset(ing_features, src, kind);
            const double thr = ing_threshold.value_or(kind == mspl::DatasetKind::amr ? mspl::amr::kAmrGtThreshold
                                                                                      : mspl::amr::kSnpGtThreshold);
            paired.dataset.gt_clusters = mspl::amr::derive_gt_clusters(paired.dataset.dissimilarity, thr).labels;
            fs::create_directories(ing_out);
            mspl::write_dataset(paired.dataset, ing_out);
            mspl::amr::write_manifest(paired, fs::path(ing_out) / "manifest.json", {ing_features, src.path});
            std::cout << "ingested " << paired.dataset.size() << " samples, "
                      << paired.dataset.num_classes() << " species, "
                      << mspl::cluster::normalize_labels(*paired.dataset.gt_clusters).cluster_count()
                      << " gt clusters at threshold " << thr << '\n';
        } else if (*train) {
            auto cfg = train_flags.build();
            const auto data = mspl::harness::load_experiment_dataset(cfg);
            const auto r = mspl::harness::run_single_fold(cfg, data, train_trial, train_fold,
                                                          mspl::model::variant_from_string(train_variant),
                                                          fs::path(train_out), &std::clog);
            json j = r;
            std::cout << j.dump(2) << '\n';
        } else if (*crossval) {
            auto cfg = cv_flags.build();
            const auto data = mspl::harness::load_experiment_dataset(cfg);
            const auto res = mspl::harness::run_experiment(cfg, data, fs::path(cv_out), cv_quiet ? nullptr : &std::clog);
            mspl::report::emit_report(res, cv_out, fs::path(cv_out));
            const auto agg = mspl::report::aggregate(res);
            if (agg.completed_trials.empty()) {
                const auto& errs = agg.failed_trials.begin()->second;
                std::cerr << "error: every trial failed; first: " << errs.front() << '\n';
                return exit_code_for(errs.front());
            }
            std::ifstream table(fs::path(cv_out) / "table1.csv");
            std::cout << table.rdbuf();
        } else if (*tune) {
            const auto [ids, h] = mspl::read_matrix_csv(tune_features);
            const auto gt = mspl::read_clusters_csv(tune_gt, ids);
            const auto r = mspl::harness::tune_threshold(h, gt, tune_bound);
            if (r.warning) std::cerr << "warning: " << *r.warning << '\n';
            print_json({{"threshold", r.threshold}, {"f1", r.f1}, {"candidates", r.candidates}}, tune_out);
        } else if (*evaluate) {
            // The gt file fixes the sample universe; the prediction must cover it.
            const auto table = mspl::csv::read(ev_gt);
            std::vector<std::string> ids;
            for (const auto& row : table.rows) ids.push_back(row.fields.at(0));
            const auto gt = mspl::read_clusters_csv(ev_gt, ids);
            const auto pred = mspl::read_clusters_csv(ev_pred, ids);
            json j = mspl::metrics::evaluate_partition(pred, gt);
            print_json(j, ev_out);
        } else if (*mds) {
            if (mds_dissim.empty() == mds_features.empty())
                throw mspl::UsageError("give exactly one of --dissim, --features");
            std::vector<std::string> ids;
            mspl::Matrix d;
            if (!mds_dissim.empty()) {
                auto m = mspl::read_dissimilarity_csv(mds_dissim);
                ids = m.ids;
                d = m.values;
            } else {
                auto [i, h] = mspl::read_matrix_csv(mds_features);
                ids = i;
                d = mspl::pairwise_euclidean(h);
            }
            mspl::metrics::write_mds_csv(ids, mspl::metrics::classical_mds(d), mds_out);
        } else if (*report) {
            const auto res = mspl::report::load_results(rep_run);
            const fs::path out = rep_out.empty() ? fs::path(rep_run) : fs::path(rep_out);
            mspl::report::emit_report(res, out, fs::path(rep_run));
            std::ifstream table(out / "table1.csv");
            std::cout << table.rdbuf();
        }
    } catch (const mspl::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 1;
    } catch (const mspl::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const mspl::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
