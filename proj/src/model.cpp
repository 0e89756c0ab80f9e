#include "mspl/model.hpp"

#include <cmath>
#include <random>

#include "mspl/errors.hpp"

namespace mspl::model {

const char* to_string(Variant v) {
    switch (v) {
        case Variant::mspl: return "mspl";
        case Variant::onlycls: return "onlycls";
        case Variant::cluscls: return "cluscls";
    }
    return "unknown";
}

const char* to_string(StructLossKind k) { return k == StructLossKind::mse ? "mse" : "snp"; }

Variant variant_from_string(const std::string& s) {
    if (s == "mspl") return Variant::mspl;
    if (s == "onlycls") return Variant::onlycls;
    if (s == "cluscls") return Variant::cluscls;
    throw UsageError("unknown model variant '" + s + "' (expected mspl, onlycls or cluscls)");
}

StructLossKind struct_loss_from_string(const std::string& s) {
    if (s == "mse") return StructLossKind::mse;
    if (s == "snp") return StructLossKind::snp;
    throw UsageError("unknown structure loss '" + s + "' (expected mse or snp)");
}

void ModelConfig::validate() const {
    if (depth == 0) throw UsageError("model depth must be positive");
    if (channels.size() != depth)
        throw UsageError("expected " + std::to_string(depth) + " channel widths, got " + std::to_string(channels.size()));
    for (auto c : channels)
        if (c == 0) throw UsageError("channel widths must be positive");
    if (kernel_size == 0 || kernel_size % 2 == 0) throw UsageError("kernel size must be odd");
    const std::size_t factor = std::size_t{1} << depth;
    if (input_length == 0 || input_length % factor != 0) {
        const std::size_t padded = (input_length / factor + 1) * factor;
        throw UsageError("input length " + std::to_string(input_length) + " is not divisible by 2^" +
                         std::to_string(depth) + " = " + std::to_string(factor) + "; pad each series with " +
                         std::to_string(padded - input_length) + " values to length " + std::to_string(padded));
    }
    if (hidden_dim == 0 || latent_dim == 0) throw UsageError("hidden and latent dimensions must be positive");
    if (num_pretext_classes < 1) throw UsageError("at least one pretext class is required");
    if (!(lambda0 >= 0.0) || !(lambda1 >= 0.0)) throw UsageError("loss weights must be nonnegative");
    if (variant == Variant::cluscls && num_cluster_classes < 1)
        throw UsageError("clusCLS requires num_cluster_classes >= 1");
    if (struct_loss == StructLossKind::snp) {
        if (!snp_threshold || !(*snp_threshold > 0.0)) throw UsageError("snp structure loss requires a positive threshold");
    } else if (snp_threshold) {
        throw UsageError("snp_threshold is only valid with the snp structure loss");
    }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"input_length", c.input_length},
                       {"depth", c.depth},
                       {"channels", c.channels},
                       {"kernel_size", c.kernel_size},
                       {"hidden_dim", c.hidden_dim},
                       {"latent_dim", c.latent_dim},
                       {"num_pretext_classes", c.num_pretext_classes},
                       {"num_cluster_classes", c.num_cluster_classes},
                       {"lambda0", c.lambda0},
                       {"lambda1", c.lambda1},
                       {"struct_loss", to_string(c.struct_loss)},
                       {"snp_threshold", c.snp_threshold ? nlohmann::json(*c.snp_threshold) : nlohmann::json(nullptr)},
                       {"variant", to_string(c.variant)}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
    ModelConfig d;
    c.input_length = j.value("input_length", d.input_length);
    c.depth = j.value("depth", d.depth);
    c.channels = j.value("channels", d.channels);
    c.kernel_size = j.value("kernel_size", d.kernel_size);
    c.hidden_dim = j.value("hidden_dim", d.hidden_dim);
    c.latent_dim = j.value("latent_dim", d.latent_dim);
    c.num_pretext_classes = j.value("num_pretext_classes", d.num_pretext_classes);
    c.num_cluster_classes = j.value("num_cluster_classes", d.num_cluster_classes);
    c.lambda0 = j.value("lambda0", d.lambda0);
    c.lambda1 = j.value("lambda1", d.lambda1);
    c.struct_loss = struct_loss_from_string(j.value("struct_loss", std::string("mse")));
    if (j.contains("snp_threshold") && !j.at("snp_threshold").is_null())
        c.snp_threshold = j.at("snp_threshold").get<double>();
    else
        c.snp_threshold.reset();
    c.variant = variant_from_string(j.value("variant", std::string("mspl")));
}

// ---------------------------------------------------------------------------

namespace {

void glorot_uniform(ad::Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (auto& v : t.data()) v = dist(rng);
}

void check_finite(const ad::Var& v, const std::string& layer) {
    if (!v.value().all_finite()) throw NumericalError("forward: non-finite activation in layer " + layer);
}

}  // namespace

MsplModel::MsplModel(ModelConfig config, std::uint64_t seed) : config_(std::move(config)), seed_(seed) {
    config_.validate();
    std::mt19937_64 rng(seed_);
    const auto& ch = config_.channels;
    const std::size_t depth = config_.depth;
    const std::size_t k = config_.kernel_size;

    auto init_conv = [&](const std::string& name, std::size_t cin, std::size_t cout) {
        Conv c = make_conv(name, cin, cout);
        glorot_uniform(c.weight->value, cin * k, cout * k, rng);
        return c;
    };
    auto init_dense = [&](const std::string& name, std::size_t in, std::size_t out) {
        Dense d = make_dense(name, in, out);
        glorot_uniform(d.weight->value, in, out, rng);
        return d;
    };

    std::size_t cin = 1;
    for (std::size_t l = 0; l < depth; ++l) {
        enc_conv_.push_back(init_conv("enc" + std::to_string(l) + ".conv", cin, ch[l]));
        enc_down_.push_back(init_conv("enc" + std::to_string(l) + ".down", ch[l], ch[l]));
        cin = ch[l];
    }
    std::size_t ccur = ch[depth - 1];
    for (std::size_t l = depth; l-- > 0;) {
        dec_conv_.push_back(init_conv("dec" + std::to_string(l) + ".conv", ccur + ch[l], ch[l]));
        ccur = ch[l];
    }
    out_conv_ = init_conv("dec.out", ch[0], 1);

    const std::size_t flat = ch[depth - 1] * bottleneck_length();
    enc_h1_ = init_dense("enc_h.fc1", flat, config_.hidden_dim);
    enc_h2_ = init_dense("enc_h.fc2", config_.hidden_dim, config_.latent_dim);
    cls_ = init_dense("cls", config_.latent_dim, config_.num_pretext_classes);
    if (config_.variant == Variant::cluscls)
        cls_c_ = init_dense("cls_c", config_.latent_dim + config_.num_pretext_classes, config_.num_cluster_classes);
}

MsplModel::Conv MsplModel::make_conv(const std::string& name, std::size_t cin, std::size_t cout) {
    params_.emplace_back(name + ".weight", ad::Tensor(ad::Shape{cout, cin, config_.kernel_size}));
    auto* w = &params_.back();
    params_.emplace_back(name + ".bias", ad::Tensor(ad::Shape{cout}));
    return Conv{w, &params_.back()};
}

MsplModel::Dense MsplModel::make_dense(const std::string& name, std::size_t in, std::size_t out) {
    params_.emplace_back(name + ".weight", ad::Tensor(ad::Shape{in, out}));
    auto* w = &params_.back();
    params_.emplace_back(name + ".bias", ad::Tensor(ad::Shape{out}));
    return Dense{w, &params_.back()};
}

std::vector<ad::Parameter*> MsplModel::parameters() {
    std::vector<ad::Parameter*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
}

std::vector<const ad::Parameter*> MsplModel::parameters() const {
    std::vector<const ad::Parameter*> out;
    for (const auto& p : params_) out.push_back(&p);
    return out;
}

std::size_t MsplModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

std::size_t MsplModel::bottleneck_length() const { return config_.input_length >> config_.depth; }

ForwardOutput MsplModel::forward(ad::Graph& g, const ad::Tensor& x) {
    if (x.rank() != 2 || x.dim(1) != config_.input_length)
        throw UsageError("forward: expected input [N, " + std::to_string(config_.input_length) + "], got " +
                         ad::shape_string(x.shape()));
    const std::size_t n = x.dim(0);
    const std::size_t pad = config_.kernel_size / 2;

    auto conv = [&](ad::Var in, const Conv& c, std::size_t stride) {
        return ad::conv1d(in, g.parameter(*c.weight), g.parameter(*c.bias), stride, pad);
    };
    auto dense = [&](ad::Var in, const Dense& d) {
        return ad::add_bias(ad::matmul(in, g.parameter(*d.weight)), g.parameter(*d.bias));
    };

    ad::Var cur = g.constant(x.reshaped(ad::Shape{n, 1, config_.input_length}));
    std::vector<ad::Var> skips;
    for (std::size_t l = 0; l < config_.depth; ++l) {
        cur = ad::relu(conv(cur, enc_conv_[l], 1));
        check_finite(cur, "enc" + std::to_string(l) + ".conv");
        skips.push_back(cur);
        cur = ad::relu(conv(cur, enc_down_[l], 2));
        check_finite(cur, "enc" + std::to_string(l) + ".down");
    }
    ForwardOutput out;
    out.h0 = cur;

    for (std::size_t i = 0; i < config_.depth; ++i) {
        const std::size_t l = config_.depth - 1 - i;
        cur = ad::concat_channels(ad::upsample2(cur), skips[l]);
        cur = ad::relu(conv(cur, dec_conv_[i], 1));
        check_finite(cur, "dec" + std::to_string(l) + ".conv");
    }
    out.x_hat = conv(cur, out_conv_, 1);
    check_finite(out.x_hat, "dec.out");

    ad::Var hidden = ad::relu(dense(ad::flatten(out.h0), enc_h1_));
    check_finite(hidden, "enc_h.fc1");
    out.h = dense(hidden, enc_h2_);
    check_finite(out.h, "enc_h.fc2");
    out.z = dense(out.h, cls_);
    check_finite(out.z, "cls");
    if (cls_c_) {
        out.z_c = dense(ad::concat_channels(out.h, out.z), *cls_c_);
        check_finite(*out.z_c, "cls_c");
    }
    return out;
}

}  // namespace mspl::model
