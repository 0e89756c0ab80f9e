#include "mspl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "mspl/amr.hpp"
#include "mspl/checkpoint.hpp"
#include "mspl/clustering.hpp"
#include "mspl/errors.hpp"
#include "mspl/mds.hpp"
#include "mspl/synth_ts.hpp"

namespace mspl::harness {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Scheme s) {
    switch (s) {
        case Scheme::thr: return "thr";
        case Scheme::num: return "num";
        case Scheme::cls: return "cls";
    }
    return "?";
}

Scheme scheme_from_string(const std::string& s) {
    if (s == "thr") return Scheme::thr;
    if (s == "num") return Scheme::num;
    if (s == "cls") return Scheme::cls;
    throw UsageError("unknown clustering scheme '" + s + "' (expected thr or num)");
}

void ExperimentConfig::validate() const {
    if (k_folds < 2) throw UsageError("k_folds must be at least 2");
    if (n_trials < 1) throw UsageError("n_trials must be at least 1");
    if (variants.empty()) throw UsageError("no model variant selected");
    if (schemes.empty()) throw UsageError("no clustering scheme selected");
    for (auto s : schemes)
        if (s == Scheme::cls) throw UsageError("scheme 'cls' is implied by the cluscls variant");
    const bool thr = std::find(schemes.begin(), schemes.end(), Scheme::thr) != schemes.end();
    if (thr && !(threshold_upper_bound > 0.0)) throw UsageError("threshold upper bound must be positive");
    if (gt_threshold && !(*gt_threshold >= 0.0)) throw UsageError("gt threshold must be nonnegative");
    if (kind != DatasetKind::synth && !gt_threshold)
        throw UsageError(std::string("dataset kind ") + mspl::to_string(kind) + " needs a gt threshold");
    if (train.epochs < 1) throw UsageError("epochs must be at least 1");
    if (train.batch_size < 1) throw UsageError("batch size must be at least 1");
    if (!(train.learning_rate > 0.0)) throw UsageError("learning rate must be positive");
    if (jobs < 1) throw UsageError("jobs must be at least 1");
}

ExperimentConfig default_config(DatasetKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    switch (kind) {
        case DatasetKind::synth:
            c.k_folds = 2;
            c.schemes = {Scheme::num};
            c.threshold_upper_bound = 20.0;
            break;
        case DatasetKind::snp:
            c.k_folds = 2;
            c.schemes = {Scheme::thr, Scheme::num};
            c.threshold_upper_bound = 20.0;
            c.gt_threshold = amr::kSnpGtThreshold;
            c.model.struct_loss = model::StructLossKind::snp;
            c.model.snp_threshold = amr::kSnpGtThreshold;
            break;
        case DatasetKind::amr:
            c.k_folds = 5;
            c.schemes = {Scheme::thr, Scheme::num};
            c.threshold_upper_bound = 33.0;
            c.gt_threshold = amr::kAmrGtThreshold;
            break;
    }
    return c;
}

void to_json(json& j, const ExperimentConfig& c) {
    json variants = json::array(), schemes = json::array();
    for (auto v : c.variants) variants.push_back(model::to_string(v));
    for (auto s : c.schemes) schemes.push_back(to_string(s));
    j = json{{"kind", mspl::to_string(c.kind)},
             {"paths",
              {{"synth_dir", c.paths.synth_dir.string()},
               {"features", c.paths.features.string()},
               {"amr", c.paths.amr.string()},
               {"dissim", c.paths.dissim.string()}}},
             {"variants", variants},
             {"model", c.model},
             {"train",
              {{"epochs", c.train.epochs},
               {"batch_size", c.train.batch_size},
               {"learning_rate", c.train.learning_rate}}},
             {"k_folds", c.k_folds},
             {"n_trials", c.n_trials},
             {"base_seed", c.base_seed},
             {"schemes", schemes},
             {"threshold_upper_bound", c.threshold_upper_bound},
             {"gt_threshold", c.gt_threshold ? json(*c.gt_threshold) : json(nullptr)},
             {"jobs", c.jobs},
             {"write_checkpoints", c.write_checkpoints},
             {"write_mds", c.write_mds}};
}

ExperimentConfig config_from_json(const json& j) {
    try {
        const auto kind = dataset_kind_from_string(j.value("kind", std::string("synth")));
        ExperimentConfig c = default_config(kind);
        if (j.contains("paths")) {
            const auto& p = j.at("paths");
            c.paths.synth_dir = p.value("synth_dir", std::string());
            c.paths.features = p.value("features", std::string());
            c.paths.amr = p.value("amr", std::string());
            c.paths.dissim = p.value("dissim", std::string());
        }
        if (j.contains("variants")) {
            c.variants.clear();
            for (const auto& v : j.at("variants")) c.variants.push_back(model::variant_from_string(v.get<std::string>()));
        }
        if (j.contains("model")) {
            // Merge onto the kind defaults so partial model sections work.
            json m = c.model;
            m.update(j.at("model"));
            c.model = m.get<model::ModelConfig>();
        }
        if (j.contains("train")) {
            const auto& t = j.at("train");
            c.train.epochs = t.value("epochs", c.train.epochs);
            c.train.batch_size = t.value("batch_size", c.train.batch_size);
            c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
        }
        c.k_folds = j.value("k_folds", c.k_folds);
        c.n_trials = j.value("n_trials", c.n_trials);
        c.base_seed = j.value("base_seed", c.base_seed);
        if (j.contains("schemes")) {
            c.schemes.clear();
            for (const auto& s : j.at("schemes")) c.schemes.push_back(scheme_from_string(s.get<std::string>()));
        }
        c.threshold_upper_bound = j.value("threshold_upper_bound", c.threshold_upper_bound);
        if (j.contains("gt_threshold")) {
            if (j.at("gt_threshold").is_null())
                c.gt_threshold.reset();
            else
                c.gt_threshold = j.at("gt_threshold").get<double>();
        }
        c.jobs = j.value("jobs", c.jobs);
        c.write_checkpoints = j.value("write_checkpoints", c.write_checkpoints);
        c.write_mds = j.value("write_mds", c.write_mds);
        return c;
    } catch (const json::exception& e) {
        throw UsageError(std::string("invalid experiment config: ") + e.what());
    }
}

std::uint64_t derive_seed(std::uint64_t trial_seed, std::uint64_t fold, std::uint64_t stream) {
    // splitmix64 finaliser over a simple combination
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(trial_seed) ^ fold) ^ (stream + 0x51ed27));
}

std::vector<std::vector<std::size_t>> split_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 1) throw UsageError("split_folds: k must be positive");
    if (k > n)
        throw UsageError("split_folds: " + std::to_string(k) + " folds requested for " + std::to_string(n) +
                         " samples");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(seed);
    // Fisher-Yates with explicit draws; std::shuffle is implementation-defined.
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(perm[i - 1], perm[j]);
    }
    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(perm[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

namespace {

template <class T>
std::vector<T> gather(std::span<const T> v, std::span<const std::size_t> idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(v[i]);
    return out;
}

}  // namespace

TuneResult tune_threshold(const Matrix& features, std::span<const int> gt, double upper_bound) {
    if (features.rows != gt.size())
        throw UsageError("tune_threshold: " + std::to_string(features.rows) + " feature rows but " +
                         std::to_string(gt.size()) + " gt labels");
    if (!(upper_bound > 0.0)) throw UsageError("tune_threshold: upper bound must be positive");
    const auto keep = metrics::non_singleton_indices(gt);
    if (keep.empty()) throw DataError("tune_threshold: no non-singleton gt cluster in the training fold");
    const Matrix h = features.select_rows(keep);
    const auto g = gather(gt, std::span<const std::size_t>(keep));
    const auto dg = cluster::agglomerate_complete(pairwise_euclidean(h));

    std::vector<double> candidates;
    for (const auto& m : dg.merges)
        if (m.height <= upper_bound && (candidates.empty() || candidates.back() != m.height))
            candidates.push_back(m.height);
    TuneResult r;
    if (candidates.empty())
        r.warning = "no merge height at or below the upper bound " + std::to_string(upper_bound) +
                    "; using the bound";
    if (candidates.empty() || candidates.back() != upper_bound) candidates.push_back(upper_bound);
    r.candidates = candidates.size();
    r.f1 = -1.0;
    for (double tau : candidates) {
        const auto pred = cluster::cut_by_threshold(dg, tau);
        const double f1 = metrics::cluster_prf_unfiltered(pred.labels, g).f1;
        if (f1 > r.f1) {
            r.f1 = f1;
            r.threshold = tau;
        }
    }
    return r;
}

Interval aggregate_ci(std::span<const double> values) {
    if (values.empty()) throw UsageError("aggregate_ci: no values");
    Interval out;
    const double n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() < 2) return out;
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    const double s = std::sqrt(ss / (n - 1.0));
    const boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(dist, 0.975);
    out.half_width = t * s / std::sqrt(n);
    return out;
}

// ---------------------------------------------------------------- json

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::optional<double> opt_from(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}
// NaN is not representable in JSON.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

void to_json(json& j, const FoldResult& r) {
    json reports = json::object();
    for (const auto& [s, rep] : r.reports) reports[to_string(s)] = rep;
    json species = json::array();
    for (const auto& sp : r.species) {
        json f1 = json::object();
        for (const auto& [s, v] : sp.f1) f1[to_string(s)] = opt(v);
        species.push_back({{"label", sp.label},
                           {"name", sp.name},
                           {"n_samples", sp.n_samples},
                           {"entropy", sp.entropy},
                           {"pretext_accuracy", sp.pretext_accuracy},
                           {"f1", f1}});
    }
    j = json{{"trial", r.trial},
             {"fold", r.fold},
             {"variant", model::to_string(r.variant)},
             {"trial_seed", r.trial_seed},
             {"model_seed", r.model_seed},
             {"pretext_accuracy", r.pretext_accuracy},
             {"reports", reports},
             {"species", species},
             {"tuning_input_hash", r.tuning_input_hash},
             {"final_epoch",
              {{"recon", finite_or_null(r.final_epoch.recon)},
               {"pretext", finite_or_null(r.final_epoch.pretext)},
               {"structure", finite_or_null(r.final_epoch.structure)},
               {"total", finite_or_null(r.final_epoch.total)},
               {"pretext_accuracy", finite_or_null(r.final_epoch.pretext_accuracy)}}},
             {"error", r.error ? json(*r.error) : json(nullptr)}};
    if (r.tuning)
        j["tuning"] = {{"threshold", r.tuning->threshold},
                       {"f1", r.tuning->f1},
                       {"candidates", r.tuning->candidates},
                       {"warning", r.tuning->warning ? json(*r.tuning->warning) : json(nullptr)}};
    else
        j["tuning"] = nullptr;
}

FoldResult fold_result_from_json(const json& j) {
    FoldResult r;
    try {
        r.trial = j.at("trial").get<std::size_t>();
        r.fold = j.at("fold").get<std::size_t>();
        r.variant = model::variant_from_string(j.at("variant").get<std::string>());
        r.trial_seed = j.value("trial_seed", std::uint64_t{0});
        r.model_seed = j.value("model_seed", std::uint64_t{0});
        r.pretext_accuracy = j.value("pretext_accuracy", 0.0);
        for (const auto& [k, v] : j.at("reports").items()) r.reports[scheme_from_string(k)] = v.get<metrics::MetricReport>();
        for (const auto& s : j.at("species")) {
            SpeciesStats sp;
            sp.label = s.at("label").get<int>();
            sp.name = s.at("name").get<std::string>();
            sp.n_samples = s.at("n_samples").get<std::size_t>();
            sp.entropy = s.at("entropy").get<double>();
            sp.pretext_accuracy = s.at("pretext_accuracy").get<double>();
            for (const auto& [k, v] : s.at("f1").items())
                sp.f1[scheme_from_string(k)] = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
            r.species.push_back(std::move(sp));
        }
        r.tuning_input_hash = j.value("tuning_input_hash", std::string());
        if (j.contains("final_epoch")) {
            const auto& e = j.at("final_epoch");
            const double nan = std::numeric_limits<double>::quiet_NaN();
            r.final_epoch.recon = opt_from(e, "recon").value_or(nan);
            r.final_epoch.pretext = opt_from(e, "pretext").value_or(nan);
            r.final_epoch.structure = opt_from(e, "structure").value_or(nan);
            r.final_epoch.total = opt_from(e, "total").value_or(nan);
            r.final_epoch.pretext_accuracy = opt_from(e, "pretext_accuracy").value_or(nan);
        }
        if (j.contains("tuning") && !j.at("tuning").is_null()) {
            const auto& t = j.at("tuning");
            TuneResult tr;
            tr.threshold = t.at("threshold").get<double>();
            tr.f1 = t.at("f1").get<double>();
            tr.candidates = t.at("candidates").get<std::size_t>();
            if (!t.at("warning").is_null()) tr.warning = t.at("warning").get<std::string>();
            r.tuning = tr;
        }
        if (j.contains("error") && !j.at("error").is_null()) r.error = j.at("error").get<std::string>();
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed fold result: ") + e.what());
    }
    return r;
}

// ---------------------------------------------------------------- data

Dataset load_experiment_dataset(const ExperimentConfig& config) {
    const auto& p = config.paths;
    switch (config.kind) {
        case DatasetKind::synth:
            if (p.synth_dir.empty()) throw UsageError("synth dataset needs paths.synth_dir");
            return synth::load_synth_dataset(p.synth_dir);
        case DatasetKind::snp:
            if (p.features.empty() || p.dissim.empty()) throw UsageError("snp dataset needs paths.features and paths.dissim");
            return amr::load_paired_dataset(p.features, {p.dissim, amr::StructureSource::Kind::dissimilarity},
                                            DatasetKind::snp)
                .dataset;
        case DatasetKind::amr:
            if (p.features.empty()) throw UsageError("amr dataset needs paths.features");
            if (!p.amr.empty())
                return amr::load_paired_dataset(p.features, {p.amr, amr::StructureSource::Kind::amr_profiles},
                                                DatasetKind::amr)
                    .dataset;
            if (p.dissim.empty()) throw UsageError("amr dataset needs paths.amr or paths.dissim");
            return amr::load_paired_dataset(p.features, {p.dissim, amr::StructureSource::Kind::dissimilarity},
                                            DatasetKind::amr)
                .dataset;
    }
    throw UsageError("unknown dataset kind");
}

std::vector<int> ground_truth(const Dataset& data, const std::optional<double>& gt_threshold) {
    if (gt_threshold) return amr::derive_gt_clusters(data.dissimilarity, *gt_threshold).labels;
    if (!data.gt_clusters) throw UsageError("dataset has no generator ground truth; set a gt threshold");
    return cluster::normalize_labels(*data.gt_clusters).labels;
}

// ---------------------------------------------------------------- protocol

namespace {

std::string fnv1a_hex(std::span<const std::size_t> indices, const Matrix& h, std::span<const int> gt) {
    std::uint64_t x = 0xcbf29ce484222325ULL;
    auto feed = [&x](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            x ^= b[i];
            x *= 0x100000001b3ULL;
        }
    };
    for (auto i : indices) {
        const std::uint64_t v = i;
        feed(&v, sizeof v);
    }
    feed(h.values.data(), h.values.size() * sizeof(double));
    for (int g : gt) {
        const std::int64_t v = g;
        feed(&v, sizeof v);
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << x;
    return os.str();
}

fs::path fold_dir(const fs::path& root, std::size_t trial, std::size_t fold, model::Variant v) {
    return root / ("trial_" + std::to_string(trial)) / ("fold_" + std::to_string(fold)) / model::to_string(v);
}

struct Job {
    std::size_t trial, fold;
    model::Variant variant;
};

struct Shared {
    const ExperimentConfig& config;
    const Dataset& data;
    const std::vector<int>& gt;  // full-dataset ground truth, dense
    std::size_t gt_count;
    std::vector<std::vector<std::vector<std::size_t>>> folds;  // [trial][fold]
    std::optional<fs::path> out_dir;
    std::ostream* log;
    std::mutex log_mutex;
};

void log_line(Shared& s, const std::string& line) {
    if (!s.log) return;
    std::lock_guard lock(s.log_mutex);
    *s.log << line << '\n';
}

FoldResult run_fold(Shared& sh, const Job& job) {
    const auto& cfg = sh.config;
    const auto& data = sh.data;
    FoldResult r;
    r.trial = job.trial;
    r.fold = job.fold;
    r.variant = job.variant;
    r.trial_seed = cfg.base_seed + job.trial;
    r.model_seed = derive_seed(r.trial_seed, job.fold, 0);

    const auto& folds = sh.folds[job.trial];
    const auto& val = folds[job.fold];
    std::vector<std::size_t> train_idx;
    for (std::size_t f = 0; f < folds.size(); ++f)
        if (f != job.fold) train_idx.insert(train_idx.end(), folds[f].begin(), folds[f].end());
    std::sort(train_idx.begin(), train_idx.end());
    {
        std::vector<std::size_t> overlap;
        std::set_intersection(train_idx.begin(), train_idx.end(), val.begin(), val.end(), std::back_inserter(overlap));
        if (!overlap.empty()) throw std::logic_error("training and validation folds overlap");
    }

    model::ModelConfig mc = cfg.model;
    mc.variant = job.variant;
    mc.input_length = data.features.cols;
    mc.num_pretext_classes = data.num_classes();
    mc.num_cluster_classes = job.variant == model::Variant::cluscls ? sh.gt_count : 0;
    model::MsplModel net(mc, r.model_seed);

    model::TrainingSet ts;
    ts.features = &data.features;
    ts.labels = data.labels;
    ts.dissimilarity = &data.dissimilarity.values;
    ts.cluster_labels = sh.gt;
    ts.indices = train_idx;
    const auto history = model::train(net, ts, cfg.train, derive_seed(r.trial_seed, job.fold, 1));
    r.final_epoch = history.back();

    const auto pv = model::predict(net, data.features, val);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < val.size(); ++i) correct += pv.pretext[i] == data.labels[val[i]];
    r.pretext_accuracy = static_cast<double>(correct) / static_cast<double>(val.size());

    // Evaluation universe: validation samples whose gt cluster keeps >= 2
    // members inside the fold.
    const auto gt_val = gather(std::span<const int>(sh.gt), std::span<const std::size_t>(val));
    const auto eval_pos = metrics::non_singleton_indices(gt_val);
    const auto gt_eval = gather(std::span<const int>(gt_val), std::span<const std::size_t>(eval_pos));
    const Matrix h_eval = pv.features.select_rows(eval_pos);

    std::vector<Scheme> schemes;
    if (job.variant == model::Variant::cluscls)
        schemes = {Scheme::cls};
    else
        schemes = cfg.schemes;

    std::map<Scheme, std::vector<int>> preds;  // over eval_pos
    std::optional<cluster::Dendrogram> dg_val;
    auto val_dendrogram = [&]() -> const cluster::Dendrogram& {
        if (!dg_val) dg_val = cluster::agglomerate_complete(pairwise_euclidean(h_eval));
        return *dg_val;
    };
    for (auto s : schemes) {
        if (eval_pos.empty()) {
            r.reports[s] = metrics::MetricReport{};
            preds[s] = {};
            continue;
        }
        std::vector<int> pred;
        if (s == Scheme::num) {
            const std::size_t q = cluster::normalize_labels(gt_eval).cluster_count();
            pred = cluster::cut_by_count(val_dendrogram(), q).labels;
        } else if (s == Scheme::thr) {
            // Tuning sees training rows only.
            const auto pt = model::predict(net, data.features, train_idx);
            const auto gt_train = gather(std::span<const int>(sh.gt), std::span<const std::size_t>(train_idx));
            r.tuning_input_hash = fnv1a_hex(train_idx, pt.features, gt_train);
            r.tuning = tune_threshold(pt.features, gt_train, cfg.threshold_upper_bound);
            if (r.tuning->warning) log_line(sh, "warning: " + *r.tuning->warning);
            pred = cluster::cut_by_threshold(val_dendrogram(), r.tuning->threshold).labels;
        } else {
            pred = gather(std::span<const int>(pv.clusters), std::span<const std::size_t>(eval_pos));
        }
        auto rep = metrics::evaluate_partition(pred, gt_eval);
        rep.pretext_accuracy = r.pretext_accuracy;
        r.reports[s] = rep;
        preds[s] = std::move(pred);
    }

    // Per-species statistics.
    for (std::size_t label = 0; label < data.num_classes(); ++label) {
        std::vector<int> gt_members;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < val.size(); ++i)
            if (data.labels[val[i]] == static_cast<int>(label)) {
                gt_members.push_back(gt_val[i]);
                hits += pv.pretext[i] == static_cast<int>(label);
            }
        if (gt_members.empty()) continue;
        SpeciesStats sp;
        sp.label = static_cast<int>(label);
        sp.name = data.label_names[label];
        sp.n_samples = gt_members.size();
        sp.entropy = metrics::shannon_entropy(gt_members);
        sp.pretext_accuracy = static_cast<double>(hits) / static_cast<double>(gt_members.size());
        for (auto s : schemes) {
            std::vector<int> p, g;
            for (std::size_t e = 0; e < eval_pos.size(); ++e)
                if (data.labels[val[eval_pos[e]]] == static_cast<int>(label)) {
                    p.push_back(preds[s][e]);
                    g.push_back(gt_eval[e]);
                }
            std::optional<double> f1;
            if (!p.empty())
                if (auto prf = metrics::cluster_prf(p, g)) f1 = prf->f1;
            sp.f1[s] = f1;
        }
        r.species.push_back(std::move(sp));
    }

    if (sh.out_dir) {
        const fs::path dir = fold_dir(*sh.out_dir, job.trial, job.fold, job.variant);
        fs::create_directories(dir);
        if (cfg.write_checkpoints) model::save_checkpoint(net, cfg.train.epochs, dir / "model.ckpt");
        std::vector<std::string> eval_ids;
        for (auto e : eval_pos) eval_ids.push_back(data.ids[val[e]]);
        for (const auto& [s, p] : preds)
            write_clusters_csv(eval_ids, p, dir / (std::string("clusters_") + to_string(s) + ".csv"));
        std::vector<std::string> val_ids;
        for (auto i : val) val_ids.push_back(data.ids[i]);
        write_matrix_csv(val_ids, pv.features, "h", dir / "embedding_val.csv");
        if (cfg.write_mds) {
            metrics::MdsOptions mo;
            mo.max_iterations = 2000;
            mo.tolerance = 1e-10;
            metrics::write_mds_csv(val_ids, metrics::classical_mds(pairwise_euclidean(pv.features), mo), dir / "mds.csv");
        }
        json j = r;
        std::ofstream(dir / "metrics.json") << j.dump(2) << '\n';
    }

    std::ostringstream msg;
    msg << "trial " << job.trial << " fold " << job.fold << ' ' << model::to_string(job.variant)
        << ": pretext_acc=" << r.pretext_accuracy;
    for (const auto& [s, rep] : r.reports)
        msg << ' ' << to_string(s) << ".f1=" << (rep.f1 ? std::to_string(*rep.f1) : "null");
    if (!r.tuning_input_hash.empty()) msg << " tuning_hash=" << r.tuning_input_hash;
    log_line(sh, msg.str());
    return r;
}

}  // namespace

ExperimentResults run_experiment(const ExperimentConfig& config, const Dataset& data,
                                 const std::optional<fs::path>& out_dir, std::ostream* log) {
    config.validate();
    data.validate();
    const auto gt = ground_truth(data, config.gt_threshold);
    const std::size_t gt_count = cluster::normalize_labels(gt).cluster_count();
    {
        model::ModelConfig probe = config.model;
        probe.input_length = data.features.cols;
        probe.num_pretext_classes = data.num_classes();
        probe.num_cluster_classes = gt_count;
        probe.validate();
    }

    ExperimentResults res;
    res.config = config;
    res.dataset_name = mspl::to_string(data.kind);
    res.label_names = data.label_names;
    res.label_counts.assign(data.num_classes(), 0);
    for (int l : data.labels) ++res.label_counts[static_cast<std::size_t>(l)];

    Shared sh{config, data, gt, gt_count, {}, out_dir, log, {}};
    for (std::size_t t = 0; t < config.n_trials; ++t)
        sh.folds.push_back(split_folds(data.size(), config.k_folds, config.base_seed + t));

    if (out_dir) {
        fs::create_directories(*out_dir);
        json exp{{"config", config},
                 {"dataset", res.dataset_name},
                 {"n_samples", data.size()},
                 {"n_gt_clusters", gt_count},
                 {"label_names", res.label_names},
                 {"label_counts", res.label_counts}};
        json seeds = json::array();
        for (std::size_t t = 0; t < config.n_trials; ++t) {
            const std::uint64_t ts = config.base_seed + t;
            json fs_ = json::array();
            for (std::size_t f = 0; f < config.k_folds; ++f)
                fs_.push_back({{"fold", f},
                               {"model_seed", derive_seed(ts, f, 0)},
                               {"shuffle_seed", derive_seed(ts, f, 1)},
                               {"validation_size", sh.folds[t][f].size()}});
            seeds.push_back({{"trial", t}, {"trial_seed", ts}, {"folds", fs_}});
        }
        exp["seeds"] = seeds;
        std::ofstream(*out_dir / "experiment.json") << exp.dump(2) << '\n';
    }

    std::vector<Job> jobs;
    for (std::size_t t = 0; t < config.n_trials; ++t)
        for (std::size_t f = 0; f < config.k_folds; ++f)
            for (auto v : config.variants) jobs.push_back({t, f, v});

    std::vector<FoldResult> results(jobs.size());
    std::vector<std::atomic<bool>> trial_failed(config.n_trials);
    std::atomic<std::size_t> next{0};
    auto write_record = [&](const FoldResult& r) {
        if (!out_dir) return;
        const auto dir = fold_dir(*out_dir, r.trial, r.fold, r.variant);
        fs::create_directories(dir);
        json j = r;
        std::ofstream(dir / "metrics.json") << j.dump(2) << '\n';
    };
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            const Job& job = jobs[i];
            FoldResult& r = results[i];
            if (trial_failed[job.trial].load()) {
                r.trial = job.trial;
                r.fold = job.fold;
                r.variant = job.variant;
                r.trial_seed = config.base_seed + job.trial;
                r.model_seed = derive_seed(r.trial_seed, job.fold, 0);
                r.error = "skipped: an earlier fold of this trial failed";
                write_record(r);
                continue;
            }
            try {
                r = run_fold(sh, job);
            } catch (const std::exception& e) {
                const char* kind = dynamic_cast<const NumericalError*>(&e) ? "numerical"
                                   : dynamic_cast<const DataError*>(&e) ? "data"
                                   : dynamic_cast<const UsageError*>(&e) ? "usage"
                                                                        : "internal";
                r = FoldResult{};
                r.trial = job.trial;
                r.fold = job.fold;
                r.variant = job.variant;
                r.trial_seed = config.base_seed + job.trial;
                r.model_seed = derive_seed(r.trial_seed, job.fold, 0);
                r.error = std::string(kind) + ": " + e.what();
                trial_failed[job.trial] = true;
                log_line(sh, "trial " + std::to_string(job.trial) + " fold " + std::to_string(job.fold) + ' ' +
                                 model::to_string(job.variant) + " failed: " + *r.error);
                write_record(r);
            }
        }
    };
    const std::size_t nthreads = std::min(config.jobs, jobs.size());
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    }
    res.folds = std::move(results);
    return res;
}

FoldResult run_single_fold(const ExperimentConfig& config, const Dataset& data, std::size_t trial, std::size_t fold,
                           model::Variant variant, const std::optional<fs::path>& out_dir, std::ostream* log) {
    config.validate();
    data.validate();
    if (trial >= config.n_trials) throw UsageError("trial index " + std::to_string(trial) + " out of range");
    if (fold >= config.k_folds) throw UsageError("fold index " + std::to_string(fold) + " out of range");
    const auto gt = ground_truth(data, config.gt_threshold);
    const std::size_t gt_count = cluster::normalize_labels(gt).cluster_count();
    Shared sh{config, data, gt, gt_count, {}, out_dir, log, {}};
    sh.folds.resize(trial + 1);
    sh.folds[trial] = split_folds(data.size(), config.k_folds, config.base_seed + trial);
    return run_fold(sh, {trial, fold, variant});
}

}  // namespace mspl::harness
