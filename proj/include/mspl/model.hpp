#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mspl/autodiff.hpp"

namespace mspl::model {

enum class Variant { mspl, onlycls, cluscls };
enum class StructLossKind { mse, snp };

const char* to_string(Variant v);
const char* to_string(StructLossKind k);
Variant variant_from_string(const std::string& s);
StructLossKind struct_loss_from_string(const std::string& s);

struct ModelConfig {
    std::size_t input_length = 512;
    std::size_t depth = 3;
    std::vector<std::size_t> channels{16, 32, 64};  // one width per encoder level
    std::size_t kernel_size = 3;
    std::size_t hidden_dim = 256;  // Enc_h hidden width
    std::size_t latent_dim = 32;   // d_h
    std::size_t num_pretext_classes = 2;
    std::size_t num_cluster_classes = 0;  // clusCLS only
    double lambda0 = 1.0;
    double lambda1 = 1.0;
    StructLossKind struct_loss = StructLossKind::mse;
    std::optional<double> snp_threshold;
    Variant variant = Variant::mspl;

    /// Throws UsageError on any violated invariant.
    void validate() const;
    /// True when the distance-matching term contributes to the objective.
    bool distance_loss_active() const { return variant == Variant::mspl && lambda1 > 0.0; }
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

/// Graph handles produced by one forward pass.
struct ForwardOutput {
    ad::Var h0;     // bottleneck [N, C, L / 2^depth]
    ad::Var x_hat;  // reconstruction [N, 1, L]
    ad::Var h;      // features [N, d_h]
    ad::Var z;      // pretext logits [N, classes]
    std::optional<ad::Var> z_c;  // cluster logits, clusCLS only
};

/// 1-D U-Net autoencoder with a feature head, a pretext classifier and, for
/// clusCLS, a cluster-label classifier over h || z.
class MsplModel {
public:
    MsplModel(ModelConfig config, std::uint64_t seed);

    MsplModel(const MsplModel&) = delete;
    MsplModel& operator=(const MsplModel&) = delete;
    MsplModel(MsplModel&&) = default;

    const ModelConfig& config() const noexcept { return config_; }
    std::uint64_t seed() const noexcept { return seed_; }

    /// Parameters in declaration order.
    std::vector<ad::Parameter*> parameters();
    std::vector<const ad::Parameter*> parameters() const;
    std::size_t parameter_count() const;
    std::size_t bottleneck_length() const;

    /// x is [N, input_length]; the graph owns every intermediate value.
    /// Throws NumericalError naming the layer if an activation is non-finite.
    ForwardOutput forward(ad::Graph& graph, const ad::Tensor& x);

private:
    struct Conv {
        ad::Parameter* weight;
        ad::Parameter* bias;
    };
    struct Dense {
        ad::Parameter* weight;  // [in, out]
        ad::Parameter* bias;
    };

    Conv make_conv(const std::string& name, std::size_t cin, std::size_t cout);
    Dense make_dense(const std::string& name, std::size_t in, std::size_t out);

    ModelConfig config_;
    std::uint64_t seed_;
    std::deque<ad::Parameter> params_;  // stable addresses
    std::vector<Conv> enc_conv_, enc_down_, dec_conv_;
    Conv out_conv_{};
    Dense enc_h1_{}, enc_h2_{}, cls_{};
    std::optional<Dense> cls_c_;
};

}  // namespace mspl::model
