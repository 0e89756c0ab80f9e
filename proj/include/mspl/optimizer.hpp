#pragma once

#include <cstdint>
#include <vector>

#include "mspl/autodiff.hpp"

namespace mspl::ad {

struct AdamOptions {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected adaptive moment estimation. Moment buffers are allocated
/// with the shapes of the parameters passed at construction.
class Adam {
public:
    Adam(std::vector<Parameter*> params, AdamOptions options = {});

    /// Applies one update from the current Parameter::grad values. If any
    /// gradient is non-finite nothing is modified and NumericalError names
    /// the offending parameter.
    void step();
    void zero_grad();

    std::uint64_t step_count() const noexcept { return step_; }
    const AdamOptions& options() const noexcept { return options_; }
    const std::vector<Parameter*>& parameters() const noexcept { return params_; }
    const Tensor& first_moment(std::size_t i) const { return m_.at(i); }
    const Tensor& second_moment(std::size_t i) const { return v_.at(i); }

private:
    std::vector<Parameter*> params_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    AdamOptions options_;
    std::uint64_t step_ = 0;
};

}  // namespace mspl::ad
