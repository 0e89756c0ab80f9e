#pragma once

#include <optional>
#include <span>

#include "mspl/autodiff.hpp"
#include "mspl/model.hpp"

namespace mspl::model {

/// Sum of squared reconstruction errors divided by the batch size N.
ad::Var loss_recon(ad::Var x, ad::Var x_hat);
/// Mean softmax cross-entropy of the pretext logits.
ad::Var loss_pretext(ad::Var z, std::span<const int> y);
/// Mean over all N^2 ordered pairs of (pd - d)^2, diagonal included.
ad::Var loss_struct_mse(ad::Var pd, ad::Var d);
/// Mean over all N^2 ordered pairs of f_snp(pd_ij, d_ij, t).
ad::Var loss_struct_snp(ad::Var pd, ad::Var d, double threshold);
/// Mean cross-entropy of the cluster-label logits.
ad::Var loss_struct_cls(ad::Var z_c, std::span<const int> cluster_labels);

/// Thresholded residual: (x - y)^2 when y <= t, otherwise max(0, t - x)^2.
double f_snp(double x, double y, double t);

struct LossComponents {
    ad::Var recon;
    ad::Var pretext;
    std::optional<ad::Var> structure;  // absent for onlyCLS or when inactive
};

/// L_recon + lambda0 L_pretext + lambda1 L_struct.
ad::Var loss_total(const LossComponents& parts, const ModelConfig& config);

}  // namespace mspl::model
