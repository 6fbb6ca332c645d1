#include "dermx/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dermx/errors.hpp"
#include "dermx/fusion.hpp"
#include "dermx/optim.hpp"
#include "dermx/resample.hpp"

namespace dermx {

using ad::Tensor;

TrainConfig TrainConfig::from_config(KeyValueConfig& cfg) {
    TrainConfig tc;
    tc.epochs = cfg.get_int("epochs", tc.epochs);
    tc.optimizer = cfg.get_string("optimizer", tc.optimizer);
    tc.lr = cfg.get_double("lr", tc.lr);
    tc.schedule = cfg.get_string("schedule", tc.schedule);
    tc.batch_size = cfg.get_int("batch_size", tc.batch_size);
    tc.weight_decay = cfg.get_double("weight_decay", tc.weight_decay);
    tc.restart_period = cfg.get_int("restart_period", tc.restart_period);
    tc.restart_mult = cfg.get_int("restart_mult", tc.restart_mult);
    tc.min_lr = cfg.get_double("min_lr", tc.min_lr);
    tc.class_weighting = cfg.get_bool("class_weighting", tc.class_weighting);
    tc.augment_enabled = cfg.get_bool("augment_enabled", tc.augment_enabled);
    tc.seed = static_cast<uint64_t>(cfg.get_int("seed", static_cast<int>(tc.seed)));
    tc.checkpoint_every = cfg.get_int("checkpoint_every", tc.checkpoint_every);
    tc.fuzzy_scale = cfg.get_string("fuzzy_scale", tc.fuzzy_scale);
    if (tc.fuzzy_scale != "bilinear" && tc.fuzzy_scale != "area")
        throw ConfigError("fuzzy_scale must be bilinear or area");
    auto& a = tc.augmentation;
    a.rotation = cfg.get_double("augmentation.rotation", a.rotation);
    a.zoom = cfg.get_double("augmentation.zoom", a.zoom);
    a.brightness = cfg.get_double("augmentation.brightness", a.brightness);
    a.contrast = cfg.get_double("augmentation.contrast", a.contrast);
    a.saturation = cfg.get_double("augmentation.saturation", a.saturation);
    a.scale = cfg.get_pair("augmentation.scale", a.scale);
    a.translate = cfg.get_pair("augmentation.translate", a.translate);
    a.hue = cfg.get_double("augmentation.hue", a.hue);
    if (tc.epochs < 1) throw ConfigError("epochs must be >= 1");
    for (double magnitude : {a.rotation, a.zoom, a.brightness, a.contrast, a.saturation,
                             a.translate.first, a.translate.second, a.hue})
        if (magnitude < 0) throw ConfigError("augmentation magnitudes must be non-negative");
    if (a.scale.first <= 0 || a.scale.second < a.scale.first)
        throw ConfigError("augmentation.scale must be a positive, ordered pair");
    if (tc.optimizer != "adamw") throw ConfigError("unknown optimizer '" + tc.optimizer + "'");
    if (tc.schedule != "cosine_restarts" && tc.schedule != "constant")
        throw ConfigError("unknown schedule '" + tc.schedule + "'");
    return tc;
}

TrainSet build_train_set(const std::vector<ImageRecord>& records,
                         const std::vector<FusedLabels>& fused, const DermXConfig& config,
                         const std::vector<std::string>* restrict_to, FuzzyScaleMode scale_mode) {
    if (records.size() != fused.size()) throw SchemaError("records and fused labels must align");
    TrainSet set;
    set.disease_names.assign(disease_names().begin(), disease_names().begin() + kNumDiseases);
    if (!fused.empty()) set.characteristic_names = fused.front().characteristics;

    const auto [fh, fw] = nn::backbone_feature_hw(config.backbone, config.input_h, config.input_w);

    for (size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        if (restrict_to &&
            std::find(restrict_to->begin(), restrict_to->end(), rec.image_id) == restrict_to->end())
            continue;
        TrainSample s;
        s.image_id = rec.image_id;
        s.image = resize_bilinear(rec.pixels, config.input_h, config.input_w);
        s.disease = static_cast<int>(rec.gold_diagnosis);
        s.z = fused[i].presence;
        s.feature_masks.assign(set.characteristic_names.size(), Grid(fh, fw, 0.0));
        s.image_masks.assign(set.characteristic_names.size(),
                             Grid(config.input_h, config.input_w, 0.0));
        s.has_mask.assign(set.characteristic_names.size(), 0);
        for (size_t c = 0; c < set.characteristic_names.size(); ++c) {
            auto it = fused[i].fuzzy_maps.find(set.characteristic_names[c]);
            if (it == fused[i].fuzzy_maps.end()) continue;
            FuzzyMask full{it->second.to_grid(), set.characteristic_names[c], rec.image_id};
            s.feature_masks[c] = downscale_fuzzy(full, fh, fw, scale_mode).values;
            s.image_masks[c] = downscale_fuzzy(full, config.input_h, config.input_w, scale_mode).values;
            s.has_mask[c] = 1;
        }
        set.samples.push_back(std::move(s));
    }
    return set;
}

namespace {

Tensor batch_images(const TrainSet& set, const std::vector<size_t>& idx,
                    const TrainConfig* augment_cfg, int epoch) {
    std::vector<Image> images;
    images.reserve(idx.size());
    for (size_t i : idx) {
        if (augment_cfg && augment_cfg->augment_enabled) {
            auto rng = augment_rng(augment_cfg->seed, epoch, set.samples[i].image_id);
            images.push_back(augment(set.samples[i].image, augment_cfg->augmentation, rng));
        } else {
            images.push_back(set.samples[i].image);
        }
    }
    return images_to_tensor(images);
}

Tensor batch_onehot(const TrainSet& set, const std::vector<size_t>& idx, int n_classes,
                    const std::vector<double>* class_weights) {
    std::vector<double> v(idx.size() * static_cast<size_t>(n_classes), 0.0);
    for (size_t r = 0; r < idx.size(); ++r) {
        const int d = set.samples[idx[r]].disease;
        v[r * n_classes + d] = class_weights ? (*class_weights)[static_cast<size_t>(d)] : 1.0;
    }
    return Tensor::constant({static_cast<int64_t>(idx.size()), n_classes}, std::move(v));
}

Tensor batch_multihot(const TrainSet& set, const std::vector<size_t>& idx, int n_chars) {
    std::vector<double> v(idx.size() * static_cast<size_t>(n_chars), 0.0);
    for (size_t r = 0; r < idx.size(); ++r)
        for (int c = 0; c < n_chars; ++c) v[r * n_chars + c] = set.samples[idx[r]].z[c] ? 1.0 : 0.0;
    return Tensor::constant({static_cast<int64_t>(idx.size()), n_chars}, std::move(v));
}

// guided-attention targets and pair masks for one characteristic
std::pair<Tensor, Tensor> batch_attention_targets(const TrainSet& set,
                                                  const std::vector<size_t>& idx, size_t c,
                                                  int64_t hw) {
    std::vector<double> m(idx.size() * static_cast<size_t>(hw), 0.0);
    std::vector<double> z(idx.size(), 0.0);
    for (size_t r = 0; r < idx.size(); ++r) {
        const TrainSample& s = set.samples[idx[r]];
        if (!s.z[c] || !s.has_mask[c]) continue;
        z[r] = 1.0;
        const auto& vals = s.feature_masks[c].values();
        std::copy(vals.begin(), vals.end(), m.begin() + r * static_cast<size_t>(hw));
    }
    return {Tensor::constant({static_cast<int64_t>(idx.size()), hw}, std::move(m)),
            Tensor::constant({static_cast<int64_t>(idx.size())}, std::move(z))};
}

std::vector<double> inverse_frequency_weights(const TrainSet& set, int n_classes) {
    std::vector<double> counts(static_cast<size_t>(n_classes), 0.0);
    for (const auto& s : set.samples) counts[static_cast<size_t>(s.disease)] += 1.0;
    std::vector<double> w(counts.size(), 0.0);
    const double total = static_cast<double>(set.samples.size());
    for (size_t i = 0; i < counts.size(); ++i)
        w[i] = counts[i] > 0 ? total / (n_classes * counts[i]) : 0.0;
    return w;
}

ad::Tensor select_column(const Tensor& matrix, int64_t column) {
    const int64_t rows = matrix.shape()[0], cols = matrix.shape()[1];
    auto idx = std::make_shared<std::vector<int64_t>>(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) (*idx)[static_cast<size_t>(r)] = r * cols + column;
    return ad::gather(matrix, idx, {rows});
}

}  // namespace

TrainHistory train_model(DermXModel& model, const TrainSet& train_set, const TrainSet* val_set,
                         const TrainConfig& config, const EpochCallback& on_epoch) {
    if (train_set.samples.empty()) throw SchemaError("train_model: empty training set");
    const int n_classes = model.config().num_diseases;
    const int n_chars = model.config().num_characteristics;
    const bool has_char_head = model.kind() != ModelKind::kDxOnly;
    const bool guided = model.kind() == ModelKind::kDermXPlus && model.config().lambda_a > 0;

    for (const auto& s : train_set.samples) {
        if (s.disease < 0 || s.disease >= n_classes)
            throw SchemaError("train_model: disease index out of range for " + s.image_id);
        if (has_char_head && static_cast<int>(s.z.size()) != n_chars)
            throw SchemaError("train_model: characteristic vector size mismatch for " + s.image_id);
    }

    TrainHistory history;
    history.model_kind = to_string(model.kind());
    history.lambda_d = model.config().lambda_d;
    history.lambda_c = has_char_head ? model.config().lambda_c : 0.0;
    history.lambda_a = guided ? model.config().lambda_a : 0.0;

    AdamW opt(model.parameters(), config.lr, config.weight_decay);
    CosineRestarts schedule(config.lr, config.restart_period, config.restart_mult, config.min_lr);

    std::optional<std::vector<double>> class_weights;
    if (config.class_weighting) class_weights = inverse_frequency_weights(train_set, n_classes);

    std::mt19937_64 shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<size_t> order(train_set.samples.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<ad::Tensor> params;
    for (auto& p : model.parameters()) params.push_back(p.tensor);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double lr = config.schedule == "constant" ? config.lr : schedule.lr_at(epoch);
        opt.set_lr(lr);

        for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng() % i]);

        double sum_ld = 0.0, sum_lc = 0.0, sum_la = 0.0;
        int batches = 0;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            const size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<size_t> idx(order.begin() + start, order.begin() + end);

            Tensor images = batch_images(train_set, idx, &config, epoch);
            ModelOutputs out = model.forward(images, /*train=*/true);

            Tensor l_d = loss_diagnosis(out.diagnosis_probs,
                                        batch_onehot(train_set, idx, n_classes,
                                                     class_weights ? &*class_weights : nullptr));
            Tensor l_c, l_a;
            if (has_char_head)
                l_c = loss_characteristics(out.characteristic_probs,
                                           batch_multihot(train_set, idx, n_chars));
            if (guided) {
                const int64_t hw = out.features.shape()[2] * out.features.shape()[3];
                std::vector<Tensor> maps, targets, masks;
                for (int c = 0; c < n_chars; ++c) {
                    Tensor logits_c = select_column(out.characteristic_logits, c);
                    maps.push_back(grad_cam_maps(out.features, logits_c, /*create_graph=*/true,
                                                 model.config().attention_full_second_order));
                    auto [m, z] = batch_attention_targets(train_set, idx, c, hw);
                    targets.push_back(m);
                    masks.push_back(z);
                }
                l_a = loss_attention(maps, targets, masks);
            }
            Tensor total = combine_losses(l_d, l_c, l_a, model.config());

            if (!std::isfinite(total.item())) {
                std::vector<std::string> ids;
                for (size_t i : idx) ids.push_back(train_set.samples[i].image_id);
                std::string joined;
                for (const auto& id : ids) joined += (joined.empty() ? "" : ",") + id;
                throw TrainDivergence("non-finite loss at epoch " + std::to_string(epoch) +
                                          " on batch [" + joined + "]",
                                      std::move(ids));
            }

            opt.step(ad::grad(total, params, /*create_graph=*/false));

            sum_ld += l_d.item();
            if (l_c.defined()) sum_lc += l_c.item();
            if (l_a.defined()) sum_la += l_a.item();
            ++batches;
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        stats.loss_diagnosis = sum_ld / batches;
        if (has_char_head) stats.loss_characteristics = sum_lc / batches;
        if (guided) stats.loss_attention = sum_la / batches;
        if (val_set) stats.val_macro_f1 = diagnosis_macro_f1(model, *val_set);
        history.epochs.push_back(stats);

        if (on_epoch) on_epoch(epoch, model);
    }
    return history;
}

namespace {

// forward a set in eval mode, batched to bound memory
std::vector<ModelOutputs> eval_forward(DermXModel& model, const TrainSet& set, int batch = 16) {
    std::vector<ModelOutputs> outs;
    for (size_t start = 0; start < set.samples.size(); start += batch) {
        const size_t end = std::min(set.samples.size(), start + static_cast<size_t>(batch));
        std::vector<size_t> idx(end - start);
        std::iota(idx.begin(), idx.end(), start);
        ad::NoGradGuard ng;
        outs.push_back(model.forward(batch_images(set, idx, nullptr, 0), /*train=*/false));
    }
    return outs;
}

}  // namespace

double diagnosis_macro_f1(DermXModel& model, const TrainSet& set) {
    const int n_classes = model.config().num_diseases;
    std::vector<int> pred;
    for (const auto& out : eval_forward(model, set)) {
        const auto& probs = out.diagnosis_probs;
        const int64_t rows = probs.shape()[0], cols = probs.shape()[1];
        for (int64_t r = 0; r < rows; ++r) {
            int best = 0;
            for (int c = 1; c < cols; ++c)
                if (probs.data()[r * cols + c] > probs.data()[r * cols + best]) best = c;
            pred.push_back(best);
        }
    }
    std::vector<MetricValue> per_class;
    for (int d = 0; d < n_classes; ++d) {
        std::vector<uint8_t> p, t;
        for (size_t i = 0; i < set.samples.size(); ++i) {
            p.push_back(pred[i] == d);
            t.push_back(set.samples[i].disease == d);
        }
        per_class.push_back(binary_prf(p, t).f1);
    }
    const Aggregate agg = aggregate(per_class);
    return agg.mean.value_or(0.0);
}

double characteristic_macro_f1(DermXModel& model, const TrainSet& set) {
    if (model.kind() == ModelKind::kDxOnly) throw SchemaError("Dx-only model has no characteristics");
    const int n_chars = model.config().num_characteristics;
    std::vector<std::vector<uint8_t>> pred;
    for (const auto& out : eval_forward(model, set)) {
        const auto& probs = out.characteristic_probs;
        const int64_t rows = probs.shape()[0], cols = probs.shape()[1];
        for (int64_t r = 0; r < rows; ++r) {
            std::vector<uint8_t> bits(static_cast<size_t>(cols));
            for (int64_t c = 0; c < cols; ++c) bits[c] = probs.data()[r * cols + c] >= 0.5;
            pred.push_back(std::move(bits));
        }
    }
    std::vector<MetricValue> per_char;
    for (int c = 0; c < n_chars; ++c) {
        std::vector<uint8_t> p, t;
        for (size_t i = 0; i < set.samples.size(); ++i) {
            p.push_back(pred[i][c]);
            t.push_back(set.samples[i].z[c]);
        }
        per_char.push_back(binary_prf(p, t).f1);
    }
    return aggregate(per_char).mean.value_or(0.0);
}

double attention_loss_value(DermXModel& model, const TrainSet& set) {
    if (model.kind() == ModelKind::kDxOnly) throw SchemaError("Dx-only model has no attention maps");
    const int n_chars = model.config().num_characteristics;
    double total = 0.0;
    int count = 0;
    for (size_t start = 0; start < set.samples.size(); start += 16) {
        const size_t end = std::min(set.samples.size(), start + size_t{16});
        std::vector<size_t> idx(end - start);
        std::iota(idx.begin(), idx.end(), start);
        Tensor images = batch_images(set, idx, nullptr, 0);
        // graph needed: attention maps differentiate logits wrt features
        ModelOutputs out = model.forward(images, /*train=*/false);
        const int64_t hw = out.features.shape()[2] * out.features.shape()[3];
        for (int c = 0; c < n_chars; ++c) {
            Tensor logits_c = select_column(out.characteristic_logits, c);
            Tensor maps = grad_cam_maps(out.features, logits_c, /*create_graph=*/false);
            auto [m, z] = batch_attention_targets(set, idx, c, hw);
            Tensor terms = attention_dice_terms(maps, m, z);
            for (size_t r = 0; r < idx.size(); ++r) {
                if (z.data()[r] > 0) {
                    total += terms.data()[r];
                    ++count;
                }
            }
        }
    }
    return count > 0 ? total / count : 0.0;
}

}  // namespace dermx
