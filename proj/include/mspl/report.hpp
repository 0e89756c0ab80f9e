#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mspl/harness.hpp"

namespace mspl::report {

struct MetricSummary {
    std::optional<harness::Interval> interval;  // empty when no trial defines the metric
    std::vector<std::optional<double>> per_trial;  // one slot per completed trial
};

/// One table1.csv row. The f1 interval's mean is the harmonic mean of the mean
/// precision and mean recall; its half-width comes from the per-trial F1
/// values, each the harmonic mean of that trial's precision and recall.
struct TableRow {
    model::Variant variant = model::Variant::mspl;
    harness::Scheme scheme = harness::Scheme::num;
    std::map<std::string, MetricSummary> metrics;  // ari nmi precision recall f1 pretext_accuracy
};

struct SpeciesRow {
    int label = 0;
    std::string name;
    std::size_t n_samples = 0;
    double entropy = 0.0;
    double pretext_accuracy = 0.0;
    std::optional<double> lift_vs_onlycls;
    std::optional<double> lift_vs_cluscls;
};

struct SpeciesF1 {
    model::Variant variant = model::Variant::mspl;
    harness::Scheme scheme = harness::Scheme::num;
    std::string species;
    std::optional<double> mean_f1;
    std::size_t n_folds = 0;  // folds where the F1 is defined
};

struct Aggregate {
    std::vector<std::size_t> completed_trials;
    std::map<std::size_t, std::vector<std::string>> failed_trials;  // trial -> error records
    std::vector<TableRow> rows;
    std::vector<SpeciesF1> species_f1;
    std::vector<SpeciesRow> species;
    /// Scheme used for per-species F1 and lift: thr when active, else num.
    harness::Scheme lift_scheme = harness::Scheme::num;
};

inline const std::vector<std::string>& metric_names() {
    static const std::vector<std::string> names{"ari", "nmi", "precision", "recall", "f1", "pretext_accuracy"};
    return names;
}

const char* display_name(model::Variant v);

/// Per-trial values are fold means; trials with any failed fold are excluded.
Aggregate aggregate(const harness::ExperimentResults& results);

/// Writes table1.csv, lift.csv, species_f1.csv, aggregate.json and
/// run_manifest.json into `out_dir`; copies trial 0 / fold 0 MDS coordinates
/// of the first variant from `run_dir` to mds.csv when present.
void emit_report(const harness::ExperimentResults& results, const std::filesystem::path& out_dir,
                 const std::optional<std::filesystem::path>& run_dir = std::nullopt);

/// Rebuilds results from a run directory written by run_experiment.
harness::ExperimentResults load_results(const std::filesystem::path& run_dir);

}  // namespace mspl::report
