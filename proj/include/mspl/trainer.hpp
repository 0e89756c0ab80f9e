#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mspl/dataset.hpp"
#include "mspl/model.hpp"
#include "mspl/optimizer.hpp"

namespace mspl::model {

/// A view of the rows of a dataset used for training.
struct TrainingSet {
    const Matrix* features = nullptr;       // all samples
    std::span<const int> labels;            // pretext labels, all samples
    const Matrix* dissimilarity = nullptr;  // full N x N external matrix
    std::span<const int> cluster_labels;    // clusCLS targets, all samples
    std::vector<std::size_t> indices;       // rows participating in training
};

struct EpochStats {
    double recon = 0.0;
    double pretext = 0.0;
    double structure = 0.0;  // NaN when no structure term is active
    double total = 0.0;
    double pretext_accuracy = 0.0;
    std::size_t samples = 0;
    std::size_t batches = 0;
    std::size_t skipped_batches = 0;
    std::vector<std::string> warnings;
};

struct TrainOptions {
    std::size_t epochs = 50;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
};

/// One shuffled pass over the training rows. Each batch's dissimilarities are
/// sliced from the full matrix by the batch's sample indices.
EpochStats train_epoch(MsplModel& model, const TrainingSet& data, ad::Adam& optimizer, std::size_t batch_size,
                       std::mt19937_64& rng);

/// Runs `options.epochs` epochs with a fresh optimizer and a shuffling stream
/// seeded from `seed`.
std::vector<EpochStats> train(MsplModel& model, const TrainingSet& data, const TrainOptions& options,
                              std::uint64_t seed);

struct Predictions {
    Matrix features;  // h, one row per requested sample
    std::vector<int> pretext;
    std::vector<int> clusters;  // argmax z_c, clusCLS only
};

/// Forward-only inference in chunks of `batch_size` rows.
Predictions predict(MsplModel& model, const Matrix& x, std::span<const std::size_t> indices,
                    std::size_t batch_size = 256);

}  // namespace mspl::model
