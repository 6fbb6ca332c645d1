#include "dermx/model.hpp"

#include <cmath>

#include "dermx/errors.hpp"

namespace dermx {

using ad::Tensor;

void DermXConfig::validate() const {
    if (lambda_d < 0 || lambda_c < 0 || lambda_a < 0) throw SchemaError("lambdas must be >= 0");
    if (dense_width < 1) throw SchemaError("dense_width must be >= 1");
    if (num_diseases < 2) throw SchemaError("num_diseases must be >= 2");
    if (num_characteristics < 1) throw SchemaError("num_characteristics must be >= 1");
    if (dropout < 0 || dropout >= 1) throw SchemaError("dropout must be in [0,1)");
    if (input_h < 4 || input_w < 4) throw SchemaError("input size too small");
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::kDxOnly: return "dx";
        case ModelKind::kDermX: return "dermx";
        case ModelKind::kDermXPlus: return "dermx+";
    }
    return "dermx";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "dx" || name == "dx_only") return ModelKind::kDxOnly;
    if (name == "dermx") return ModelKind::kDermX;
    if (name == "dermx+" || name == "dermx_plus") return ModelKind::kDermXPlus;
    throw SchemaError("unknown model kind '" + name + "'");
}

DermXModel::DermXModel(ModelKind kind, const DermXConfig& config)
    : kind_(kind), config_(config), rng_(config.init_seed) {
    config_.validate();
    backbone_ = nn::make_backbone(config_.backbone, rng_);
    dropout_.p = config_.dropout;
    const int64_t flat = flat_feature_dim();

    if (kind_ != ModelKind::kDxOnly) {
        expl_dense_ = nn::Linear("expl.dense", static_cast<int>(flat), config_.dense_width, rng_);
        expl_out_ = nn::Linear("expl.out", config_.dense_width, config_.num_characteristics, rng_);
    }
    diag_dense_ = nn::Linear("diag.dense", static_cast<int>(flat), config_.dense_width, rng_);
    const int diag_in = kind_ == ModelKind::kDxOnly
                            ? config_.dense_width
                            : config_.dense_width + config_.num_characteristics;
    diag_out_ = nn::Linear("diag.out", diag_in, config_.num_diseases, rng_);

    backbone_->collect(params_);
    if (kind_ != ModelKind::kDxOnly) {
        expl_dense_.collect(params_);
        expl_out_.collect(params_);
    }
    diag_dense_.collect(params_);
    diag_out_.collect(params_);
}

int64_t DermXModel::flat_feature_dim() const {
    const auto [h, w] = backbone_->feature_hw(config_.input_h, config_.input_w);
    return static_cast<int64_t>(backbone_->feature_channels()) * h * w;
}

ad::Tensor DermXModel::features_only(const ad::Tensor& images, bool train) {
    return backbone_->forward(images, train, rng_);
}

ModelOutputs DermXModel::heads_from_features(const ad::Tensor& features, bool train,
                                             const ad::Tensor* override_characteristic_logits) {
    const auto& s = features.shape();
    if (s.size() != 4) throw SchemaError("heads_from_features expects (N,K,h,w)");
    const int64_t n = s[0];
    Tensor flat = ad::reshape(features, {n, s[1] * s[2] * s[3]});

    ModelOutputs out;
    out.features = features;

    if (kind_ != ModelKind::kDxOnly) {
        Tensor e = dropout_.forward(flat, train, rng_);
        e = ad::relu(expl_dense_.forward(e));
        e = dropout_.forward(e, train, rng_);
        out.characteristic_logits = expl_out_.forward(e);
        out.characteristic_probs =
            ad::clamp(ad::sigmoid(out.characteristic_logits), kProbClamp, 1.0 - kProbClamp);
    }

    Tensor d = dropout_.forward(flat, train, rng_);
    d = ad::relu(diag_dense_.forward(d));
    d = dropout_.forward(d, train, rng_);
    if (kind_ != ModelKind::kDxOnly) {
        const Tensor& logits = override_characteristic_logits ? *override_characteristic_logits
                                                              : out.characteristic_logits;
        d = ad::concat_cols(d, logits);
    }
    out.diagnosis_logits = diag_out_.forward(d);
    out.diagnosis_probs = ad::softmax_rows(out.diagnosis_logits);
    return out;
}

ModelOutputs DermXModel::forward(const ad::Tensor& images, bool train) {
    return heads_from_features(features_only(images, train), train);
}

ad::Tensor images_to_tensor(const std::vector<Image>& images) {
    if (images.empty()) throw SchemaError("images_to_tensor: empty batch");
    const int h = images[0].height(), w = images[0].width();
    const int64_t n = static_cast<int64_t>(images.size());
    std::vector<double> v(static_cast<size_t>(n) * 3 * h * w);
    size_t k = 0;
    for (const auto& img : images) {
        if (img.height() != h || img.width() != w)
            throw SchemaError("images_to_tensor: mixed image sizes in batch");
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) v[k++] = img.at(y, x, c) / 255.0;
    }
    return Tensor::constant({n, 3, h, w}, std::move(v));
}

ad::Tensor image_to_tensor(const Image& image) { return images_to_tensor({image}); }

// --- losses --------------------------------------------------------------------

ad::Tensor loss_diagnosis(const Tensor& probs, const Tensor& onehot) {
    if (probs.shape() != onehot.shape()) throw SchemaError("loss_diagnosis: shape mismatch");
    const double scale = -1.0 / static_cast<double>(probs.numel());
    Tensor logp = ad::log(ad::clamp(probs, kProbClamp, 1.0));
    return ad::mul_scalar(ad::sum_all(ad::mul(onehot, logp)), scale);
}

ad::Tensor loss_characteristics(const Tensor& probs, const Tensor& multihot) {
    if (probs.shape() != multihot.shape()) throw SchemaError("loss_characteristics: shape mismatch");
    const double scale = -1.0 / static_cast<double>(probs.numel());
    Tensor p = ad::clamp(probs, kProbClamp, 1.0 - kProbClamp);
    Tensor pos = ad::mul(multihot, ad::log(p));
    Tensor one_minus_z = ad::add_scalar(ad::neg(multihot), 1.0);
    Tensor one_minus_p = ad::add_scalar(ad::neg(p), 1.0);
    Tensor neg_term = ad::mul(one_minus_z, ad::log(one_minus_p));
    return ad::mul_scalar(ad::sum_all(ad::add(pos, neg_term)), scale);
}

ad::Tensor attention_dice_terms(const Tensor& attention, const Tensor& target, const Tensor& z) {
    if (attention.shape() != target.shape())
        throw SchemaError("attention_dice_terms: attention/target resolution mismatch");
    if (attention.shape().size() != 2 || z.shape().size() != 1 ||
        z.shape()[0] != attention.shape()[0])
        throw SchemaError("attention_dice_terms: bad shapes");
    Tensor inter = ad::row_sum(ad::mul(attention, target));                      // (N)
    Tensor denom = ad::add_scalar(ad::add(ad::row_sum(attention), ad::row_sum(target)), kDiceEps);
    Tensor dice = ad::mul(ad::mul_scalar(inter, 2.0), ad::reciprocal(denom));
    return ad::mul(z, ad::add_scalar(ad::neg(dice), 1.0));
}

ad::Tensor loss_attention(const std::vector<Tensor>& attention_per_char,
                          const std::vector<Tensor>& target_per_char,
                          const std::vector<Tensor>& z_per_char) {
    if (attention_per_char.size() != target_per_char.size() ||
        attention_per_char.size() != z_per_char.size() || attention_per_char.empty())
        throw SchemaError("loss_attention: per-characteristic lists must align");
    Tensor total;
    int64_t n = attention_per_char[0].shape()[0];
    for (size_t c = 0; c < attention_per_char.size(); ++c) {
        Tensor terms = ad::sum_all(
            attention_dice_terms(attention_per_char[c], target_per_char[c], z_per_char[c]));
        total = total.defined() ? ad::add(total, terms) : terms;
    }
    const double scale = 1.0 / (static_cast<double>(n) * attention_per_char.size());
    return ad::mul_scalar(total, scale);
}

ad::Tensor combine_losses(const Tensor& l_d, const Tensor& l_c, const Tensor& l_a,
                          const DermXConfig& config) {
    Tensor total = ad::mul_scalar(l_d, config.lambda_d);
    if (l_c.defined()) total = ad::add(total, ad::mul_scalar(l_c, config.lambda_c));
    if (l_a.defined()) total = ad::add(total, ad::mul_scalar(l_a, config.lambda_a));
    return total;
}

// --- Grad-CAM ------------------------------------------------------------------

ad::Tensor grad_cam_maps(const Tensor& features, const Tensor& class_logits, bool create_graph,
                         bool full_second_order) {
    const auto& s = features.shape();
    if (s.size() != 4) throw SchemaError("grad_cam_maps expects (N,K,h,w) features");
    if (class_logits.shape().size() != 1 || class_logits.shape()[0] != s[0])
        throw SchemaError("grad_cam_maps expects per-image class logits");
    const int64_t n = s[0], k = s[1], hw = s[2] * s[3];

    // per-image gradients: images are independent through the network, so
    // d(sum_i logit_i)/dF keeps rows separated
    Tensor score = ad::sum_all(class_logits);
    if (!score.requires_grad())
        throw SchemaError("grad_cam_maps: logits carry no gradient (inference-only graph)");
    Tensor g = ad::grad(score, {features}, create_graph)[0];  // (N,K,h,w)

    Tensor weights = ad::mul_scalar(ad::row_sum(ad::reshape(g, {n * k, hw})),
                                    1.0 / static_cast<double>(hw));  // (N*K)
    if (!full_second_order) weights = weights.detach();

    Tensor f2 = ad::reshape(features, {n * k, hw});
    Tensor weighted = ad::mul(f2, ad::broadcast_cols(weights, hw));
    Tensor summed = ad::scatter_add(weighted, ad::sum_channels_map(n, k, hw), {n, hw});
    Tensor raw = ad::relu(summed);  // (N,hw)

    Tensor mn = ad::row_min(raw), mx = ad::row_max(raw);
    Tensor range = ad::sub(mx, mn);
    // constant maps normalize to all-zeros
    std::vector<double> live(static_cast<size_t>(n)), pad(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        live[static_cast<size_t>(i)] = range.data()[static_cast<size_t>(i)] > 0.0 ? 1.0 : 0.0;
        pad[static_cast<size_t>(i)] = 1.0 - live[static_cast<size_t>(i)];
    }
    Tensor denom = ad::add(range, Tensor::constant({n}, std::move(pad)));
    Tensor scale = ad::mul(ad::reciprocal(denom), Tensor::constant({n}, std::move(live)));
    Tensor centered = ad::sub(raw, ad::broadcast_cols(mn, hw));
    return ad::mul(centered, ad::broadcast_cols(scale, hw));
}

AttentionMap grad_cam(DermXModel& model, const Image& image, int class_index, GradCamHead head) {
    if (head == GradCamHead::kCharacteristic && model.kind() == ModelKind::kDxOnly)
        throw SchemaError("grad_cam: the Dx-only model has no characteristic head");
    const int n_classes = head == GradCamHead::kDiagnosis ? model.config().num_diseases
                                                          : model.config().num_characteristics;
    if (class_index < 0 || class_index >= n_classes)
        throw SchemaError("grad_cam: class index out of range");

    Tensor feature_leaf;
    {
        ad::NoGradGuard ng;
        Tensor f = model.features_only(image_to_tensor(image), /*train=*/false);
        feature_leaf = Tensor::param(f.shape(), f.data());
    }
    ModelOutputs out = model.heads_from_features(feature_leaf, /*train=*/false);
    const Tensor& logits = head == GradCamHead::kDiagnosis ? out.diagnosis_logits
                                                           : out.characteristic_logits;
    // column class_index of the (1,n_classes) logit row
    auto col = std::make_shared<std::vector<int64_t>>(1, class_index);
    Tensor class_logit = ad::gather(logits, col, {1});
    Tensor maps = grad_cam_maps(feature_leaf, class_logit, /*create_graph=*/false);

    const auto [h, w] = model.feature_hw();
    AttentionMap am;
    am.characteristic = head == GradCamHead::kCharacteristic &&
                        class_index < static_cast<int>(model.characteristic_names.size())
                            ? model.characteristic_names[class_index]
                            : "";
    am.values = Grid(h, w, maps.data());
    return am;
}

}  // namespace dermx
