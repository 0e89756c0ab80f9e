#include "mspl/report.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "mspl/csv.hpp"
#include "mspl/errors.hpp"

namespace mspl::report {

namespace fs = std::filesystem;
using harness::Scheme;
using model::Variant;
using nlohmann::json;

const char* display_name(Variant v) {
    switch (v) {
        case Variant::mspl: return "MSPL";
        case Variant::onlycls: return "onlyCLS";
        case Variant::cluscls: return "clusCLS";
    }
    return "?";
}

namespace {

std::optional<double> metric_of(const metrics::MetricReport& r, const std::string& name) {
    if (name == "ari") return r.ari;
    if (name == "nmi") return r.nmi;
    if (name == "precision") return r.precision;
    if (name == "recall") return r.recall;
    if (name == "f1") return r.f1;
    if (name == "pretext_accuracy") return r.pretext_accuracy;
    return std::nullopt;
}

std::optional<double> mean_of(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::optional<double> harmonic(const std::optional<double>& p, const std::optional<double>& r) {
    if (!p || !r) return std::nullopt;
    const double s = *p + *r;
    return s > 0.0 ? 2.0 * *p * *r / s : 0.0;
}

MetricSummary summarize(std::vector<std::optional<double>> per_trial) {
    MetricSummary m;
    std::vector<double> defined;
    for (const auto& v : per_trial)
        if (v) defined.push_back(*v);
    if (!defined.empty()) m.interval = harness::aggregate_ci(defined);
    m.per_trial = std::move(per_trial);
    return m;
}

std::vector<Scheme> schemes_for(const harness::ExperimentConfig& c, Variant v) {
    if (v == Variant::cluscls) return {Scheme::cls};
    return c.schemes;
}

std::string cell(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); }

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

}  // namespace

Aggregate aggregate(const harness::ExperimentResults& results) {
    const auto& cfg = results.config;
    Aggregate agg;
    agg.lift_scheme = std::find(cfg.schemes.begin(), cfg.schemes.end(), Scheme::thr) != cfg.schemes.end()
                          ? Scheme::thr
                          : Scheme::num;

    for (const auto& f : results.folds)
        if (f.error) agg.failed_trials[f.trial].push_back(*f.error);
    for (std::size_t t = 0; t < cfg.n_trials; ++t)
        if (!agg.failed_trials.count(t)) agg.completed_trials.push_back(t);
    const std::set<std::size_t> ok(agg.completed_trials.begin(), agg.completed_trials.end());

    for (auto v : cfg.variants)
        for (auto s : schemes_for(cfg, v)) {
            TableRow row;
            row.variant = v;
            row.scheme = s;
            std::map<std::string, std::vector<std::optional<double>>> trial_values;
            for (auto t : agg.completed_trials) {
                std::map<std::string, std::vector<double>> fold_values;
                for (const auto& f : results.folds) {
                    if (f.trial != t || f.variant != v) continue;
                    const auto it = f.reports.find(s);
                    if (it == f.reports.end()) continue;
                    for (const auto& name : metric_names())
                        if (name != "f1")
                            if (auto x = metric_of(it->second, name)) fold_values[name].push_back(*x);
                }
                for (const auto& name : metric_names())
                    if (name != "f1") trial_values[name].push_back(mean_of(fold_values[name]));
                trial_values["f1"].push_back(
                    harmonic(trial_values["precision"].back(), trial_values["recall"].back()));
            }
            for (const auto& name : metric_names()) row.metrics[name] = summarize(trial_values[name]);
            // Keep the row's F1 the harmonic mean of its precision and recall.
            auto& f1 = row.metrics["f1"];
            const auto& p = row.metrics["precision"].interval;
            const auto& r = row.metrics["recall"].interval;
            if (f1.interval && p && r) f1.interval->mean = *harmonic(p->mean, r->mean);
            agg.rows.push_back(std::move(row));
        }

    // Per-species F1 means over every fold of every completed trial.
    std::map<std::pair<Variant, Scheme>, std::map<int, std::vector<double>>> f1s;
    std::map<int, std::vector<double>> entropy, pretext;
    std::map<int, std::string> names;
    const Variant ref = std::find(cfg.variants.begin(), cfg.variants.end(), Variant::mspl) != cfg.variants.end()
                            ? Variant::mspl
                            : cfg.variants.front();
    for (const auto& f : results.folds) {
        if (!ok.count(f.trial)) continue;
        for (const auto& sp : f.species) {
            names[sp.label] = sp.name;
            for (const auto& [s, v] : sp.f1)
                if (v) f1s[{f.variant, s}][sp.label].push_back(*v);
            if (f.variant == ref) {
                entropy[sp.label].push_back(sp.entropy);
                pretext[sp.label].push_back(sp.pretext_accuracy);
            }
        }
    }
    auto mean_f1 = [&](Variant v, Scheme s, int label) -> std::optional<double> {
        const auto it = f1s.find({v, s});
        if (it == f1s.end()) return std::nullopt;
        const auto jt = it->second.find(label);
        if (jt == it->second.end()) return std::nullopt;
        return mean_of(jt->second);
    };
    for (auto v : cfg.variants)
        for (auto s : schemes_for(cfg, v))
            for (std::size_t l = 0; l < results.label_names.size(); ++l) {
                SpeciesF1 e;
                e.variant = v;
                e.scheme = s;
                e.species = results.label_names[l];
                e.mean_f1 = mean_f1(v, s, static_cast<int>(l));
                const auto it = f1s.find({v, s});
                if (it != f1s.end() && it->second.count(static_cast<int>(l)))
                    e.n_folds = it->second.at(static_cast<int>(l)).size();
                agg.species_f1.push_back(std::move(e));
            }

    for (std::size_t l = 0; l < results.label_names.size(); ++l) {
        const int label = static_cast<int>(l);
        SpeciesRow row;
        row.label = label;
        row.name = results.label_names[l];
        row.n_samples = l < results.label_counts.size() ? results.label_counts[l] : 0;
        row.entropy = mean_of(entropy[label]).value_or(0.0);
        row.pretext_accuracy = mean_of(pretext[label]).value_or(0.0);
        const auto m = mean_f1(Variant::mspl, agg.lift_scheme, label);
        if (m) {
            if (auto b = mean_f1(Variant::onlycls, agg.lift_scheme, label)) row.lift_vs_onlycls = metrics::lift(*m, *b);
            if (auto b = mean_f1(Variant::cluscls, Scheme::cls, label)) row.lift_vs_cluscls = metrics::lift(*m, *b);
        }
        agg.species.push_back(std::move(row));
    }
    return agg;
}

void emit_report(const harness::ExperimentResults& results, const fs::path& out_dir,
                 const std::optional<fs::path>& run_dir) {
    fs::create_directories(out_dir);
    const auto agg = aggregate(results);

    {
        std::ostringstream os;
        os << "dataset,model,scheme";
        for (const auto& n : metric_names()) os << ',' << n << ',' << n << "_ci";
        os << ",n_trials\n";
        for (const auto& row : agg.rows) {
            os << results.dataset_name << ',' << display_name(row.variant) << ',' << harness::to_string(row.scheme);
            for (const auto& n : metric_names()) {
                const auto& m = row.metrics.at(n);
                os << ',' << cell(m.interval ? std::optional<double>(m.interval->mean) : std::nullopt) << ','
                   << cell(m.interval ? m.interval->half_width : std::nullopt);
            }
            os << ',' << agg.completed_trials.size() << '\n';
        }
        write_text(out_dir / "table1.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "species,entropy,pretext_accuracy,n_samples,lift_vs_onlycls,lift_vs_cluscls\n";
        for (const auto& s : agg.species)
            os << s.name << ',' << csv::format_double(s.entropy) << ',' << csv::format_double(s.pretext_accuracy)
               << ',' << s.n_samples << ',' << cell(s.lift_vs_onlycls) << ',' << cell(s.lift_vs_cluscls) << '\n';
        write_text(out_dir / "lift.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "model,scheme,species,mean_f1,n_folds\n";
        for (const auto& s : agg.species_f1)
            os << model::to_string(s.variant) << ',' << harness::to_string(s.scheme) << ',' << s.species << ','
               << cell(s.mean_f1) << ',' << s.n_folds << '\n';
        write_text(out_dir / "species_f1.csv", os.str());
    }
    {
        json rows = json::array();
        for (const auto& row : agg.rows) {
            json metrics = json::object();
            for (const auto& n : metric_names()) {
                const auto& m = row.metrics.at(n);
                json per = json::array();
                for (const auto& v : m.per_trial) per.push_back(opt(v));
                metrics[n] = {{"mean", m.interval ? json(m.interval->mean) : json(nullptr)},
                              {"half_width", m.interval ? opt(m.interval->half_width) : json(nullptr)},
                              {"per_trial", per}};
            }
            rows.push_back({{"model", model::to_string(row.variant)},
                            {"scheme", harness::to_string(row.scheme)},
                            {"metrics", metrics}});
        }
        json failed = json::object();
        for (const auto& [t, errs] : agg.failed_trials) failed[std::to_string(t)] = errs;
        json j{{"dataset", results.dataset_name},
               {"completed_trials", agg.completed_trials},
               {"failed_trials", failed},
               {"lift_scheme", harness::to_string(agg.lift_scheme)},
               {"rows", rows}};
        write_text(out_dir / "aggregate.json", j.dump(2) + "\n");
    }
    {
        json folds = json::array();
        for (const auto& f : results.folds) {
            folds.push_back({{"trial", f.trial},
                             {"fold", f.fold},
                             {"model", model::to_string(f.variant)},
                             {"trial_seed", f.trial_seed},
                             {"model_seed", f.model_seed},
                             {"tuning_input_hash", f.tuning_input_hash},
                             {"tuned_threshold", f.tuning ? json(f.tuning->threshold) : json(nullptr)},
                             {"error", f.error ? json(*f.error) : json(nullptr)}});
        }
        json j{{"config", results.config},
               {"dataset", results.dataset_name},
               {"label_names", results.label_names},
               {"label_counts", results.label_counts},
               {"folds", folds},
               {"outputs", {"table1.csv", "lift.csv", "species_f1.csv", "aggregate.json", "mds.csv"}}};
        write_text(out_dir / "run_manifest.json", j.dump(2) + "\n");
    }
    if (run_dir && !results.config.variants.empty()) {
        const fs::path src =
            *run_dir / "trial_0" / "fold_0" / model::to_string(results.config.variants.front()) / "mds.csv";
        if (fs::exists(src) && fs::absolute(src) != fs::absolute(out_dir / "mds.csv"))
            fs::copy_file(src, out_dir / "mds.csv", fs::copy_options::overwrite_existing);
    }
}

harness::ExperimentResults load_results(const fs::path& run_dir) {
    const fs::path exp_path = run_dir / "experiment.json";
    std::ifstream in(exp_path);
    if (!in) throw DataError("cannot read " + exp_path.string());
    json exp;
    try {
        in >> exp;
    } catch (const json::exception& e) {
        throw DataError(exp_path.string() + ": " + e.what());
    }
    harness::ExperimentResults res;
    res.config = harness::config_from_json(exp.at("config"));
    res.dataset_name = exp.at("dataset").get<std::string>();
    res.label_names = exp.at("label_names").get<std::vector<std::string>>();
    res.label_counts = exp.at("label_counts").get<std::vector<std::size_t>>();
    for (std::size_t t = 0; t < res.config.n_trials; ++t)
        for (std::size_t f = 0; f < res.config.k_folds; ++f)
            for (auto v : res.config.variants) {
                const fs::path p = run_dir / ("trial_" + std::to_string(t)) / ("fold_" + std::to_string(f)) /
                                   model::to_string(v) / "metrics.json";
                std::ifstream fin(p);
                if (!fin) {
                    // A fold skipped after an earlier failure leaves no file.
                    harness::FoldResult r;
                    r.trial = t;
                    r.fold = f;
                    r.variant = v;
                    r.error = "missing " + p.string();
                    res.folds.push_back(std::move(r));
                    continue;
                }
                json j;
                try {
                    fin >> j;
                } catch (const json::exception& e) {
                    throw DataError(p.string() + ": " + e.what());
                }
                res.folds.push_back(harness::fold_result_from_json(j));
            }
    return res;
}

}  // namespace mspl::report
