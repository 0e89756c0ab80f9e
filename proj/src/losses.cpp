#include "mspl/losses.hpp"

#include <algorithm>

#include "mspl/errors.hpp"

namespace mspl::model {

ad::Var loss_recon(ad::Var x, ad::Var x_hat) {
    if (x.shape() != x_hat.shape())
        throw UsageError("loss_recon: incompatible shapes " + ad::shape_string(x.shape()) + " and " +
                         ad::shape_string(x_hat.shape()));
    const double n = static_cast<double>(x.shape().at(0));
    return ad::scale(ad::sum(ad::sq_diff(x, x_hat)), 1.0 / n);
}

ad::Var loss_pretext(ad::Var z, std::span<const int> y) { return ad::softmax_cross_entropy(z, y); }

ad::Var loss_struct_mse(ad::Var pd, ad::Var d) { return ad::mean(ad::sq_diff(pd, d)); }

double f_snp(double x, double y, double t) {
    if (y <= t) return (x - y) * (x - y);
    const double gap = std::max(0.0, t - x);
    return gap * gap;
}

ad::Var loss_struct_snp(ad::Var pd, ad::Var d, double threshold) {
    if (!(threshold > 0.0)) throw UsageError("loss_struct_snp: threshold must be positive");
    if (pd.shape() != d.shape())
        throw UsageError("loss_struct_snp: incompatible shapes " + ad::shape_string(pd.shape()) + " and " +
                         ad::shape_string(d.shape()));
    ad::Graph& g = *pd.graph;
    ad::Tensor near(pd.shape()), far(pd.shape());
    const auto dv = d.value().data();
    for (std::size_t i = 0; i < dv.size(); ++i) {
        near[i] = dv[i] <= threshold ? 1.0 : 0.0;
        far[i] = 1.0 - near[i];
    }
    ad::Var matched = ad::mul(g.constant(std::move(near)), ad::sq_diff(pd, d));
    ad::Var hinge = ad::relu(ad::add_scalar(ad::scale(pd, -1.0), threshold));
    ad::Var separated = ad::mul(g.constant(std::move(far)), ad::mul(hinge, hinge));
    return ad::mean(ad::add(matched, separated));
}

ad::Var loss_struct_cls(ad::Var z_c, std::span<const int> cluster_labels) {
    return ad::softmax_cross_entropy(z_c, cluster_labels);
}

ad::Var loss_total(const LossComponents& parts, const ModelConfig& config) {
    ad::Var total = ad::add(parts.recon, ad::scale(parts.pretext, config.lambda0));
    if (parts.structure && config.variant != Variant::onlycls)
        total = ad::add(total, ad::scale(*parts.structure, config.lambda1));
    return total;
}

}  // namespace mspl::model
