#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mspl/autodiff.hpp"

namespace mspl::ad {

/// Builds the scalar loss on a fresh graph from the current parameter values.
using LossBuilder = std::function<Var(Graph&)>;

struct GradCheckEntry {
    std::string parameter;
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    bool passed = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double tolerance = 0.0;
    bool passed() const;
    double max_relative_error() const;
};

struct GradCheckOptions {
    double tolerance = 1e-4;
    double step = 1e-5;
    // Denominator floor: |a - n| / max(|a|, |n|, floor).
    double floor = 1e-3;
};

/// Zeroes the gradients, runs one backward pass and returns a copy of every
/// parameter gradient.
std::vector<Tensor> analytic_gradients(const std::vector<Parameter*>& params, const LossBuilder& loss);

/// Compares supplied gradients against central finite differences.
GradCheckReport compare_with_finite_differences(const std::vector<Parameter*>& params, const LossBuilder& loss,
                                                const std::vector<Tensor>& gradients, GradCheckOptions options = {});

GradCheckReport grad_check(const std::vector<Parameter*>& params, const LossBuilder& loss,
                           GradCheckOptions options = {});

}  // namespace mspl::ad
