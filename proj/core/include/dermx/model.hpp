#ifndef DERMX_MODEL_HPP
#define DERMX_MODEL_HPP

#include <memory>
#include <string>
#include <vector>

#include "dermx/backbones.hpp"
#include "dermx/grid.hpp"
#include "dermx/image.hpp"
#include "dermx/nn.hpp"

namespace dermx {

struct DermXConfig {
    std::string backbone = "efficientnet-b2";
    bool pretrained = false;
    int input_h = 260, input_w = 260;
    int num_diseases = 6;
    int num_characteristics = 10;
    int dense_width = 64;
    double dropout = 0.2;
    double lambda_d = 1.0;
    double lambda_c = 1.0;
    double lambda_a = 0.0;
    // second-order gradients through the Grad-CAM channel weights; the
    // fallback detaches the weights for memory-constrained runs
    bool attention_full_second_order = true;
    uint64_t init_seed = 17;

    void validate() const;
};

enum class ModelKind { kDxOnly, kDermX, kDermXPlus };
std::string to_string(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct ModelOutputs {
    ad::Tensor features;               // (N,K,h,w)
    ad::Tensor characteristic_logits;  // (N,C); undefined for the Dx-only model
    ad::Tensor characteristic_probs;   // sigmoid, strictly in (0,1)
    ad::Tensor diagnosis_logits;       // (N,D)
    ad::Tensor diagnosis_probs;        // softmax rows
};

class DermXModel {
public:
    DermXModel(ModelKind kind, const DermXConfig& config);

    ModelOutputs forward(const ad::Tensor& images, bool train);
    ad::Tensor features_only(const ad::Tensor& images, bool train);
    // Heads on externally supplied feature maps (inference-time Grad-CAM
    // rebuilds only this part of the graph). override_characteristic_logits
    // substitutes the concatenated logits, for wiring probes.
    ModelOutputs heads_from_features(const ad::Tensor& features, bool train,
                                     const ad::Tensor* override_characteristic_logits = nullptr);

    std::vector<nn::Parameter>& parameters() { return params_; }
    std::vector<nn::BufferRef> buffers() {
        std::vector<nn::BufferRef> out;
        backbone_->collect_buffers(out);
        return out;
    }
    const DermXConfig& config() const { return config_; }
    ModelKind kind() const { return kind_; }
    nn::Rng& rng() { return rng_; }

    int feature_channels() const { return backbone_->feature_channels(); }
    std::pair<int, int> feature_hw() const {
        return backbone_->feature_hw(config_.input_h, config_.input_w);
    }
    int64_t flat_feature_dim() const;

    std::vector<std::string> disease_names;
    std::vector<std::string> characteristic_names;

private:
    ModelKind kind_;
    DermXConfig config_;
    nn::Rng rng_;
    std::unique_ptr<nn::Backbone> backbone_;
    nn::Dropout dropout_;
    nn::Linear expl_dense_, expl_out_;
    nn::Linear diag_dense_, diag_out_;
    std::vector<nn::Parameter> params_;
};

// (N,3,H,W) in [0,1]
ad::Tensor images_to_tensor(const std::vector<Image>& images);
ad::Tensor image_to_tensor(const Image& image);

// --- losses (Eqs. of the joint objective) -------------------------------------

// categorical cross-entropy over (N,D) probabilities vs one-hot targets
ad::Tensor loss_diagnosis(const ad::Tensor& probs, const ad::Tensor& onehot);
// binary cross-entropy over (N,C) probabilities vs multi-hot targets
ad::Tensor loss_characteristics(const ad::Tensor& probs, const ad::Tensor& multihot);

// per-image z * (1 - 2<A,M>/(sum A + sum M + eps)); A,M are (N,hw), z is (N)
ad::Tensor attention_dice_terms(const ad::Tensor& attention, const ad::Tensor& target,
                                const ad::Tensor& z);
// (1/(N*C)) * sum over characteristics of the per-image terms
ad::Tensor loss_attention(const std::vector<ad::Tensor>& attention_per_char,
                          const std::vector<ad::Tensor>& target_per_char,
                          const std::vector<ad::Tensor>& z_per_char);

// lambda_d*L_D + lambda_c*L_C + lambda_a*L_A (undefined terms are skipped)
ad::Tensor combine_losses(const ad::Tensor& l_d, const ad::Tensor& l_c, const ad::Tensor& l_a,
                          const DermXConfig& config);

constexpr double kProbClamp = 1e-7;
constexpr double kDiceEps = 1e-6;

// --- Grad-CAM ------------------------------------------------------------------

// Differentiable class-activation maps: channel weights are the spatial mean
// of d(sum of class logits)/d(features); the weighted feature sum is ReLU'd
// and min-max normalized per map (all-zero when the map is constant).
// Returns (N, h*w). With create_graph the result stays trainable.
ad::Tensor grad_cam_maps(const ad::Tensor& features, const ad::Tensor& class_logits,
                         bool create_graph, bool full_second_order = true);

enum class GradCamHead { kDiagnosis, kCharacteristic };

// Inference-time Grad-CAM for one image; the backbone runs without graph
// recording and only the head graph is rebuilt on a feature leaf.
AttentionMap grad_cam(DermXModel& model, const Image& image, int class_index, GradCamHead head);

}  // namespace dermx

#endif  // DERMX_MODEL_HPP
