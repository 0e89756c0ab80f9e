#pragma once

// Synth-TS(m, n): a m x m grid of independent 2-D Gaussians over
// (frequency f, slope k). Each Gaussian emits n rectified-sine and n triangle
// series, each the sum of a seasonal, a trend and a white-noise component.

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "mspl/dataset.hpp"

namespace mspl::synth {

enum class WaveType { sine = 0, triangle = 1 };

/// `verbatim` reproduces the published triangle formula (4fx - 1 + b / -4fx + 2 + b);
/// `continuous` uses the unit-amplitude triangle (4x - 1 + b / -4x + 3 + b).
enum class TriangleFormula { verbatim, continuous };

struct SynthConfig {
    std::size_t m = 5;    // grid side
    std::size_t n = 80;   // samples per wave type per Gaussian
    double mu0 = 0.2;
    double sigma_f = 0.4;
    double sigma_k = 0.5;
    double sigma_n = 0.02;  // noise standard deviation; 0 disables noise
    double offset = 1.0;    // b
    double duration = 2.0;  // seconds
    std::size_t sample_rate = 256;
    TriangleFormula triangle = TriangleFormula::verbatim;
    std::uint64_t seed = 0;

    std::size_t series_length() const;
    void validate() const;
};

struct SynthSample {
    std::vector<double> series;
    WaveType wave_type = WaveType::sine;
    double f = 0.0;
    double k = 0.0;
    int gaussian_id = 0;  // i * m + j for frequency row i and slope column j
};

struct GridMeans {
    std::vector<double> mu_f;
    std::vector<double> mu_k;
};

GridMeans grid_means(const SynthConfig& config);

/// Draws (f, k) from the Gaussian of cell `gaussian_id`; no clamping.
std::pair<double, double> sample_parameters(const SynthConfig& config, int gaussian_id, std::mt19937_64& rng);

/// Sample times t_i = i / rate over the half-open interval [0, duration).
std::vector<double> time_grid(const SynthConfig& config);

double seasonal(WaveType type, double f, double t, const SynthConfig& config);
/// k t for k >= 0, k (t - t_max) for k < 0.
double trend(double k, double t, double t_max);

std::vector<double> synthesize_series(WaveType type, double f, double k, const SynthConfig& config,
                                      std::mt19937_64& rng);

struct SynthDataset {
    std::vector<SynthSample> samples;
    Dataset dataset;  // features = series, labels = wave type, gt = gaussian id
};

/// 2 n m^2 samples ordered by Gaussian, then n sine followed by n triangle.
/// Every sample draws from its own stream seeded by (seed, sample index).
SynthDataset build_dataset(const SynthConfig& config);

/// Writes samples.csv, dissim.csv and gt_clusters.csv.
void write_synth_dataset(const SynthDataset& data, const std::filesystem::path& dir);
/// Reads the files written by write_synth_dataset.
Dataset load_synth_dataset(const std::filesystem::path& dir);

}  // namespace mspl::synth
