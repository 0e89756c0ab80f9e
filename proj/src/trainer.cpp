#include "mspl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mspl/errors.hpp"
#include "mspl/losses.hpp"

namespace mspl::model {

namespace {

ad::Tensor gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
    ad::Tensor t(ad::Shape{rows.size(), x.cols});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto src = x.row(rows[i]);
        std::copy(src.begin(), src.end(), t.data().begin() + static_cast<std::ptrdiff_t>(i * x.cols));
    }
    return t;
}

std::vector<int> argmax_rows(const ad::Tensor& logits) {
    const std::size_t n = logits.dim(0), k = logits.dim(1);
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = logits.data().subspan(i * k, k);
        out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

}  // namespace

EpochStats train_epoch(MsplModel& model, const TrainingSet& data, ad::Adam& optimizer, std::size_t batch_size,
                       std::mt19937_64& rng) {
    const auto& cfg = model.config();
    if (data.indices.empty()) throw UsageError("train_epoch: empty training set");
    if (!data.features) throw UsageError("train_epoch: missing features");
    const bool distance_loss = cfg.distance_loss_active();
    const bool cluster_loss = cfg.variant == Variant::cluscls;
    if (distance_loss && !data.dissimilarity) throw UsageError("train_epoch: structure loss needs a dissimilarity matrix");
    if (cluster_loss && data.cluster_labels.size() != data.features->rows)
        throw UsageError("train_epoch: clusCLS needs a cluster label for every sample");
    if (batch_size == 0) throw UsageError("train_epoch: batch size must be positive");
    if (distance_loss && batch_size < 2) throw UsageError("train_epoch: structure loss needs batch size >= 2");

    std::vector<std::size_t> order = data.indices;
    std::shuffle(order.begin(), order.end(), rng);

    EpochStats stats;
    double recon = 0.0, pretext = 0.0, structure = 0.0, total = 0.0;
    std::size_t correct = 0;

    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, order.size() - start);
        const std::span<const std::size_t> rows(order.data() + start, n);
        if (distance_loss && n < 2) {
            ++stats.skipped_batches;
            stats.warnings.push_back("skipped batch of size 1: structure loss needs at least two samples");
            continue;
        }

        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = data.labels[rows[i]];

        ad::Graph g;
        const ad::Tensor x = gather_rows(*data.features, rows);
        ForwardOutput out = model.forward(g, x);
        LossComponents parts;
        parts.recon = loss_recon(g.constant(x.reshaped(out.x_hat.shape())), out.x_hat);
        parts.pretext = loss_pretext(out.z, y);
        if (distance_loss) {
            ad::Tensor d(ad::Shape{n, n});
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) d[i * n + j] = (*data.dissimilarity)(rows[i], rows[j]);
            ad::Var pd = ad::pdist_rows(out.h);
            ad::Var dv = g.constant(std::move(d));
            parts.structure = cfg.struct_loss == StructLossKind::snp ? loss_struct_snp(pd, dv, *cfg.snp_threshold)
                                                                      : loss_struct_mse(pd, dv);
        } else if (cluster_loss) {
            std::vector<int> c(n);
            for (std::size_t i = 0; i < n; ++i) c[i] = data.cluster_labels[rows[i]];
            parts.structure = loss_struct_cls(*out.z_c, c);
        }
        ad::Var loss = loss_total(parts, cfg);
        if (!std::isfinite(loss.value().item())) throw NumericalError("train_epoch: non-finite loss");

        optimizer.zero_grad();
        g.backward(loss);
        optimizer.step();

        const double w = static_cast<double>(n);
        recon += w * parts.recon.value().item();
        pretext += w * parts.pretext.value().item();
        if (parts.structure) structure += w * parts.structure->value().item();
        total += w * loss.value().item();
        const auto pred = argmax_rows(out.z.value());
        for (std::size_t i = 0; i < n; ++i) correct += pred[i] == y[i];
        stats.samples += n;
        ++stats.batches;
    }

    if (stats.samples > 0) {
        const double s = static_cast<double>(stats.samples);
        stats.recon = recon / s;
        stats.pretext = pretext / s;
        stats.structure = (distance_loss || cluster_loss) ? structure / s : std::numeric_limits<double>::quiet_NaN();
        stats.total = total / s;
        stats.pretext_accuracy = static_cast<double>(correct) / s;
    } else {
        stats.structure = std::numeric_limits<double>::quiet_NaN();
    }
    return stats;
}

std::vector<EpochStats> train(MsplModel& model, const TrainingSet& data, const TrainOptions& options,
                              std::uint64_t seed) {
    ad::Adam optimizer(model.parameters(), ad::AdamOptions{.learning_rate = options.learning_rate});
    std::mt19937_64 rng(seed);
    std::vector<EpochStats> history;
    history.reserve(options.epochs);
    for (std::size_t e = 0; e < options.epochs; ++e)
        history.push_back(train_epoch(model, data, optimizer, options.batch_size, rng));
    return history;
}

Predictions predict(MsplModel& model, const Matrix& x, std::span<const std::size_t> indices, std::size_t batch_size) {
    Predictions p;
    p.features = Matrix(indices.size(), model.config().latent_dim);
    p.pretext.reserve(indices.size());
    for (std::size_t start = 0; start < indices.size(); start += batch_size) {
        const std::size_t n = std::min(batch_size, indices.size() - start);
        const auto rows = indices.subspan(start, n);
        ad::Graph g;
        ForwardOutput out = model.forward(g, gather_rows(x, rows));
        const auto hv = out.h.value().data();
        std::copy(hv.begin(), hv.end(), p.features.values.begin() + static_cast<std::ptrdiff_t>(start * p.features.cols));
        const auto z = argmax_rows(out.z.value());
        p.pretext.insert(p.pretext.end(), z.begin(), z.end());
        if (out.z_c) {
            const auto c = argmax_rows(out.z_c->value());
            p.clusters.insert(p.clusters.end(), c.begin(), c.end());
        }
    }
    return p;
}

}  // namespace mspl::model
