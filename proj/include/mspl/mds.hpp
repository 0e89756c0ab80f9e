#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "mspl/dataset.hpp"

namespace mspl::metrics {

struct MdsOptions {
    std::size_t dims = 2;
    std::size_t max_iterations = 10000;
    double tolerance = 1e-13;
};

/// Classical (Torgerson) scaling: eigenpairs of -1/2 J D^2 J by power
/// iteration with deflation. Axes with a non-positive eigenvalue are zero.
/// Each eigenvector's sign is fixed so its largest-magnitude entry is positive.
Matrix classical_mds(const Matrix& dissimilarity, MdsOptions options = {});

void write_mds_csv(std::span<const std::string> ids, const Matrix& coords, const std::filesystem::path& path);

}  // namespace mspl::metrics
