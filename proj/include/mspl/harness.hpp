#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mspl/dataset.hpp"
#include "mspl/metrics.hpp"
#include "mspl/model.hpp"
#include "mspl/trainer.hpp"

namespace mspl::harness {

/// "thr": cut at a threshold tuned on training data; "num": cut at the gt
/// cluster count; "cls": argmax of the clusCLS cluster head.
enum class Scheme { thr, num, cls };

const char* to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct DataPaths {
    std::filesystem::path synth_dir;  // samples.csv, dissim.csv, gt_clusters.csv
    std::filesystem::path features;   // features.csv
    std::filesystem::path amr;        // amr.csv (AMR profiles)
    std::filesystem::path dissim;     // dissim.csv (precomputed)
};

struct ExperimentConfig {
    DatasetKind kind = DatasetKind::synth;
    DataPaths paths;
    std::vector<model::Variant> variants{model::Variant::mspl, model::Variant::onlycls, model::Variant::cluscls};
    model::ModelConfig model;
    model::TrainOptions train;
    std::size_t k_folds = 2;
    std::size_t n_trials = 5;
    std::uint64_t base_seed = 0;
    std::vector<Scheme> schemes{Scheme::num};
    double threshold_upper_bound = 20.0;
    std::optional<double> gt_threshold;  // unset: ground truth from the generator
    std::size_t jobs = 1;
    bool write_checkpoints = true;
    bool write_mds = true;

    void validate() const;
};

/// Protocol defaults per dataset kind (schemes, bounds, gt thresholds, loss).
ExperimentConfig default_config(DatasetKind kind);

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Fields absent from `j` keep the defaults for the declared kind.
ExperimentConfig config_from_json(const nlohmann::json& j);

/// k disjoint covering folds with sizes differing by at most one, from a
/// seeded shuffle. Each fold is sorted ascending.
std::vector<std::vector<std::size_t>> split_folds(std::size_t n, std::size_t k, std::uint64_t seed);

struct TuneResult {
    double threshold = 0.0;
    double f1 = 0.0;
    std::size_t candidates = 0;
    std::optional<std::string> warning;
};

/// Picks the distance threshold maximising cluster F1 on training features.
/// Candidates are every complete-linkage merge height <= upper_bound plus
/// upper_bound itself; ties go to the smallest threshold. Samples in gt
/// singletons are removed before clustering.
TuneResult tune_threshold(const Matrix& features, std::span<const int> gt, double upper_bound);

struct Interval {
    double mean = 0.0;
    std::optional<double> half_width;  // empty for fewer than two values
};

/// Mean and 95% t-distribution half-width, t_{0.975, n-1} s / sqrt(n).
Interval aggregate_ci(std::span<const double> values);

struct SpeciesStats {
    int label = 0;
    std::string name;
    std::size_t n_samples = 0;
    double entropy = 0.0;
    double pretext_accuracy = 0.0;
    std::map<Scheme, std::optional<double>> f1;
};

struct FoldResult {
    std::size_t trial = 0;
    std::size_t fold = 0;
    model::Variant variant = model::Variant::mspl;
    std::uint64_t trial_seed = 0;
    std::uint64_t model_seed = 0;
    std::map<Scheme, metrics::MetricReport> reports;
    double pretext_accuracy = 0.0;
    std::optional<TuneResult> tuning;
    std::string tuning_input_hash;
    std::vector<SpeciesStats> species;
    model::EpochStats final_epoch;
    std::optional<std::string> error;
};

void to_json(nlohmann::json& j, const FoldResult& r);
FoldResult fold_result_from_json(const nlohmann::json& j);

struct ExperimentResults {
    ExperimentConfig config;
    std::string dataset_name;
    std::vector<std::string> label_names;
    std::vector<std::size_t> label_counts;  // samples per pretext label, full dataset
    std::vector<FoldResult> folds;
};

/// Full protocol: for every trial, split, train each variant per fold,
/// evaluate every scheme on the validation fold and collect per-species
/// statistics. Artifacts go under `out_dir` when given.
/// A failing fold marks its trial failed (error record kept, remaining folds
/// of that trial skipped). Progress lines go to `log` when non-null.
ExperimentResults run_experiment(const ExperimentConfig& config, const Dataset& data,
                                 const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                 std::ostream* log = nullptr);

/// One (trial, fold, variant) job of the protocol, with the same seeds and
/// artifacts as inside run_experiment. Errors propagate.
FoldResult run_single_fold(const ExperimentConfig& config, const Dataset& data, std::size_t trial, std::size_t fold,
                           model::Variant variant, const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                           std::ostream* log = nullptr);

/// Loads the dataset named by the config's paths.
Dataset load_experiment_dataset(const ExperimentConfig& config);

/// Ground truth for a dataset: generator clusters or a complete-linkage cut.
std::vector<int> ground_truth(const Dataset& data, const std::optional<double>& gt_threshold);

/// Seed for a (trial seed, fold, stream) triple.
std::uint64_t derive_seed(std::uint64_t trial_seed, std::uint64_t fold, std::uint64_t stream);

}  // namespace mspl::harness
