#include "dermx/explain_eval.hpp"

#include <algorithm>
#include <cmath>

#include "dermx/errors.hpp"
#include "dermx/resample.hpp"

namespace dermx {

using ad::Tensor;

EvalOutputs evaluate_outputs(DermXModel& model, const TrainSet& set) {
    EvalOutputs out;
    const int n_chars = model.kind() == ModelKind::kDxOnly ? 0 : model.config().num_characteristics;
    for (size_t start = 0; start < set.samples.size(); start += 16) {
        const size_t end = std::min(set.samples.size(), start + size_t{16});
        std::vector<Image> images;
        for (size_t i = start; i < end; ++i) images.push_back(set.samples[i].image);
        ad::NoGradGuard ng;
        ModelOutputs mo = model.forward(images_to_tensor(images), /*train=*/false);
        const int64_t rows = mo.diagnosis_probs.shape()[0];
        const int64_t d = mo.diagnosis_probs.shape()[1];
        for (int64_t r = 0; r < rows; ++r) {
            const size_t i = start + static_cast<size_t>(r);
            out.image_ids.push_back(set.samples[i].image_id);
            out.gold.push_back(set.samples[i].disease);
            int best = 0;
            for (int c = 1; c < d; ++c)
                if (mo.diagnosis_probs.data()[r * d + c] > mo.diagnosis_probs.data()[r * d + best])
                    best = c;
            out.predicted.push_back(best);
            out.predicted_prob.push_back(mo.diagnosis_probs.data()[r * d + best]);
            std::vector<double> probs(static_cast<size_t>(n_chars), 0.0);
            for (int c = 0; c < n_chars; ++c)
                probs[static_cast<size_t>(c)] = mo.characteristic_probs.data()[r * n_chars + c];
            out.char_probs.push_back(std::move(probs));
            out.z.push_back(set.samples[i].z);
        }
    }
    return out;
}

std::vector<AttentionMap> grad_cam_all(DermXModel& model, const Image& image, GradCamHead head) {
    if (head == GradCamHead::kCharacteristic && model.kind() == ModelKind::kDxOnly)
        throw SchemaError("grad_cam_all: the Dx-only model has no characteristic head");
    Tensor feature_leaf;
    {
        ad::NoGradGuard ng;
        Tensor f = model.features_only(image_to_tensor(image), /*train=*/false);
        feature_leaf = Tensor::param(f.shape(), f.data());
    }
    const int n_classes = head == GradCamHead::kDiagnosis ? model.config().num_diseases
                                                          : model.config().num_characteristics;
    const auto [h, w] = model.feature_hw();
    std::vector<AttentionMap> maps;
    for (int cls = 0; cls < n_classes; ++cls) {
        ModelOutputs out = model.heads_from_features(feature_leaf, /*train=*/false);
        const Tensor& logits = head == GradCamHead::kDiagnosis ? out.diagnosis_logits
                                                               : out.characteristic_logits;
        auto col = std::make_shared<std::vector<int64_t>>(1, cls);
        Tensor class_logit = ad::gather(logits, col, {1});
        Tensor m = grad_cam_maps(feature_leaf, class_logit, /*create_graph=*/false);
        AttentionMap am;
        am.values = Grid(h, w, m.data());
        if (head == GradCamHead::kCharacteristic &&
            cls < static_cast<int>(model.characteristic_names.size()))
            am.characteristic = model.characteristic_names[static_cast<size_t>(cls)];
        maps.push_back(std::move(am));
    }
    return maps;
}

IdentificationReport identification_report(const std::vector<EvalOutputs>& folds,
                                           const std::vector<std::string>& characteristics,
                                           double threshold) {
    IdentificationReport report;
    report.threshold = threshold;
    std::vector<MetricValue> fold_means;
    report.rows.resize(characteristics.size());
    for (size_t c = 0; c < characteristics.size(); ++c)
        report.rows[c].characteristic = characteristics[c];

    for (const auto& fold : folds) {
        std::vector<MetricValue> this_fold;
        for (size_t c = 0; c < characteristics.size(); ++c) {
            std::vector<uint8_t> pred, target;
            for (size_t i = 0; i < fold.image_ids.size(); ++i) {
                pred.push_back(fold.char_probs[i][c] >= threshold ? 1 : 0);
                target.push_back(fold.z[i][c]);
            }
            auto& row = report.rows[c];
            if (target.empty() || std::none_of(target.begin(), target.end(),
                                               [](uint8_t b) { return b != 0; })) {
                // characteristic absent from the fold
                row.fold_f1.push_back(std::nullopt);
                row.fold_sensitivity.push_back(std::nullopt);
                row.fold_specificity.push_back(std::nullopt);
                continue;
            }
            BinaryMetrics m = binary_prf(pred, target);
            row.fold_f1.push_back(m.f1);
            row.fold_sensitivity.push_back(m.sensitivity);
            row.fold_specificity.push_back(m.specificity);
            row.samples += m.support;
            this_fold.push_back(m.f1);
        }
        fold_means.push_back(aggregate(this_fold).mean);
    }
    for (auto& row : report.rows) {
        row.f1 = aggregate(row.fold_f1);
        row.sensitivity = aggregate(row.fold_sensitivity);
        row.specificity = aggregate(row.fold_specificity);
    }
    report.mean_f1 = aggregate(fold_means);
    return report;
}

LocalizationReport localization_report(DermXModel& model,
                                       const std::vector<const TrainSet*>& folds,
                                       LocalizationMode mode, EvalResolution resolution,
                                       double threshold, LocalizationPooling pooling) {
    if (model.kind() == ModelKind::kDxOnly)
        throw SchemaError("localization_report: the Dx-only model has no characteristic head");
    const int n_chars = model.config().num_characteristics;
    LocalizationReport report;
    report.mode = mode;
    report.resolution = resolution;
    report.pooling = pooling;
    report.rows.resize(static_cast<size_t>(n_chars));

    std::vector<std::vector<MetricValue>> fold_f1(static_cast<size_t>(n_chars));
    std::vector<std::vector<MetricValue>> fold_sens(static_cast<size_t>(n_chars));
    std::vector<std::vector<MetricValue>> fold_spec(static_cast<size_t>(n_chars));
    std::vector<MetricValue> fold_mean_f1, fold_mean_sens, fold_mean_spec;

    for (const TrainSet* fold : folds) {
        if (!report.rows.empty() && !fold->characteristic_names.empty())
            for (int c = 0; c < n_chars; ++c)
                report.rows[static_cast<size_t>(c)].characteristic =
                    fold->characteristic_names[static_cast<size_t>(c)];

        std::vector<std::vector<MetricValue>> f1s(static_cast<size_t>(n_chars));
        std::vector<std::vector<MetricValue>> senss(static_cast<size_t>(n_chars));
        std::vector<std::vector<MetricValue>> specs(static_cast<size_t>(n_chars));
        // pooled mode: every included pixel concatenated per characteristic
        std::vector<std::vector<double>> pooled_a(static_cast<size_t>(n_chars));
        std::vector<std::vector<double>> pooled_m(static_cast<size_t>(n_chars));
        EvalOutputs outputs = evaluate_outputs(model, *fold);

        for (size_t i = 0; i < fold->samples.size(); ++i) {
            const TrainSample& sample = fold->samples[i];
            std::vector<AttentionMap> maps;  // computed lazily per image
            for (int c = 0; c < n_chars; ++c) {
                const bool labeled = sample.z[static_cast<size_t>(c)] != 0;
                const bool predicted = outputs.char_probs[i][static_cast<size_t>(c)] >= threshold;
                const bool include = mode == LocalizationMode::kAgreedOnly ? (labeled && predicted)
                                                                           : labeled;
                if (!include) continue;
                auto& row = report.rows[static_cast<size_t>(c)];
                if (!sample.has_mask[static_cast<size_t>(c)]) {
                    ++row.skipped_missing_mask;
                    continue;
                }
                if (maps.empty()) maps = grad_cam_all(model, sample.image, GradCamHead::kCharacteristic);
                const Grid& attention = maps[static_cast<size_t>(c)].values;
                Grid a, m;
                if (resolution == EvalResolution::kImage) {
                    a = resize_bilinear(attention, sample.image.height(), sample.image.width());
                    for (auto& v : a.values()) v = std::clamp(v, 0.0, 1.0);
                    m = sample.image_masks[static_cast<size_t>(c)];
                } else {
                    a = attention;
                    m = sample.feature_masks[static_cast<size_t>(c)];
                }
                if (pooling == LocalizationPooling::kPooled) {
                    auto& pa = pooled_a[static_cast<size_t>(c)];
                    auto& pm = pooled_m[static_cast<size_t>(c)];
                    pa.insert(pa.end(), a.values().begin(), a.values().end());
                    pm.insert(pm.end(), m.values().begin(), m.values().end());
                } else {
                    f1s[static_cast<size_t>(c)].push_back(fuzzy_f1(a, m));
                    senss[static_cast<size_t>(c)].push_back(fuzzy_sensitivity(a, m));
                    specs[static_cast<size_t>(c)].push_back(fuzzy_specificity(a, m));
                }
                ++row.samples;
            }
        }
        if (pooling == LocalizationPooling::kPooled) {
            for (int c = 0; c < n_chars; ++c) {
                auto& pa = pooled_a[static_cast<size_t>(c)];
                if (pa.empty()) continue;
                Grid a(1, static_cast<int>(pa.size()), pa);
                Grid m(1, static_cast<int>(pa.size()), pooled_m[static_cast<size_t>(c)]);
                f1s[static_cast<size_t>(c)].push_back(fuzzy_f1(a, m));
                senss[static_cast<size_t>(c)].push_back(fuzzy_sensitivity(a, m));
                specs[static_cast<size_t>(c)].push_back(fuzzy_specificity(a, m));
            }
        }
        std::vector<MetricValue> per_char_f1, per_char_sens, per_char_spec;
        for (int c = 0; c < n_chars; ++c) {
            const Aggregate af = aggregate(f1s[static_cast<size_t>(c)]);
            const Aggregate as = aggregate(senss[static_cast<size_t>(c)]);
            const Aggregate ap = aggregate(specs[static_cast<size_t>(c)]);
            fold_f1[static_cast<size_t>(c)].push_back(af.mean);
            fold_sens[static_cast<size_t>(c)].push_back(as.mean);
            fold_spec[static_cast<size_t>(c)].push_back(ap.mean);
            if (af.mean) per_char_f1.push_back(af.mean);
            if (as.mean) per_char_sens.push_back(as.mean);
            if (ap.mean) per_char_spec.push_back(ap.mean);
        }
        fold_mean_f1.push_back(aggregate(per_char_f1).mean);
        fold_mean_sens.push_back(aggregate(per_char_sens).mean);
        fold_mean_spec.push_back(aggregate(per_char_spec).mean);
    }

    for (int c = 0; c < n_chars; ++c) {
        auto& row = report.rows[static_cast<size_t>(c)];
        row.f1 = aggregate(fold_f1[static_cast<size_t>(c)]);
        row.sensitivity = aggregate(fold_sens[static_cast<size_t>(c)]);
        row.specificity = aggregate(fold_spec[static_cast<size_t>(c)]);
    }
    report.mean_f1 = aggregate(fold_mean_f1);
    report.mean_sensitivity = aggregate(fold_mean_sens);
    report.mean_specificity = aggregate(fold_mean_spec);
    return report;
}

Image occlude(const Image& image, const Mask& region, const std::array<uint8_t, 3>& fill) {
    if (region.height() != image.height() || region.width() != image.width())
        throw SchemaError("occlude: region must match the image grid");
    Image out = image;
    for (int y = 0; y < image.height(); ++y)
        for (int x = 0; x < image.width(); ++x)
            if (region.at(y, x))
                for (int c = 0; c < 3; ++c) out.at(y, x, c) = fill[static_cast<size_t>(c)];
    return out;
}

std::array<uint8_t, 3> dataset_mean_color(const TrainSet& set) {
    double acc[3] = {0, 0, 0};
    size_t count = 0;
    for (const auto& s : set.samples) {
        for (int y = 0; y < s.image.height(); ++y)
            for (int x = 0; x < s.image.width(); ++x)
                for (int c = 0; c < 3; ++c) acc[c] += s.image.at(y, x, c);
        count += static_cast<size_t>(s.image.height()) * s.image.width();
    }
    std::array<uint8_t, 3> out{0, 0, 0};
    if (count == 0) return out;
    for (int c = 0; c < 3; ++c)
        out[static_cast<size_t>(c)] = static_cast<uint8_t>(std::round(acc[c] / count));
    return out;
}

Mask explanation_union(DermXModel& model, const TrainSample& sample, OcclusionSource source,
                       double threshold) {
    const int h = sample.image.height(), w = sample.image.width();
    Mask region(h, w, 0);
    if (source == OcclusionSource::kExpert) {
        for (size_t c = 0; c < sample.image_masks.size(); ++c) {
            if (!sample.has_mask[c]) continue;
            const Grid& m = sample.image_masks[c];
            for (size_t p = 0; p < m.size(); ++p)
                if (m[p] > 0.0) region[p] = 1;
        }
        return region;
    }
    // model-derived: binarize each predicted-positive map at threshold x max
    EvalOutputs outputs;
    {
        TrainSet one;
        one.samples.push_back(sample);
        outputs = evaluate_outputs(model, one);
    }
    std::vector<AttentionMap> maps = grad_cam_all(model, sample.image, GradCamHead::kCharacteristic);
    for (size_t c = 0; c < maps.size(); ++c) {
        if (outputs.char_probs[0][c] < 0.5) continue;
        Grid up = resize_bilinear(maps[c].values, h, w);
        const double cutoff = threshold * up.max();
        if (up.max() <= 0.0) continue;
        for (size_t p = 0; p < up.size(); ++p)
            if (up[p] >= cutoff) region[p] = 1;
    }
    return region;
}

FaithfulnessRecord faithfulness(DermXModel& model, const TrainSample& sample,
                                const Mask& outlines_union, const std::array<uint8_t, 3>& fill) {
    FaithfulnessRecord rec;
    rec.image_id = sample.image_id;
    rec.occlusion_union = outlines_union;

    TrainSet probe;
    probe.samples.push_back(sample);
    EvalOutputs original = evaluate_outputs(model, probe);
    rec.predicted_class = original.predicted[0];
    rec.m_x = original.predicted_prob[0];

    if (!outlines_union.any()) {
        rec.m_xe = rec.m_x;  // x_e == x exactly
        rec.f = 0.0;
        return rec;
    }
    Image contrastive = occlude(sample.image, outlines_union, fill);
    // probability of the ORIGINAL predicted class on the contrastive image
    ad::NoGradGuard ng;
    ModelOutputs mo = model.forward(image_to_tensor(contrastive), false);
    rec.m_xe = mo.diagnosis_probs.data()[static_cast<size_t>(rec.predicted_class)];
    rec.f = rec.m_x - rec.m_xe;
    return rec;
}

FaithfulnessReport faithfulness_report(DermXModel& model, const TrainSet& set,
                                       OcclusionSource source, OcclusionFill fill,
                                       double binarize_threshold) {
    FaithfulnessReport report;
    report.source = source;
    report.fill = fill;
    const std::array<uint8_t, 3> color = fill == OcclusionFill::kBlack
                                             ? std::array<uint8_t, 3>{0, 0, 0}
                                             : dataset_mean_color(set);
    std::vector<double> values;
    for (const auto& sample : set.samples) {
        Mask region = explanation_union(model, sample, source, binarize_threshold);
        FaithfulnessRecord rec = faithfulness(model, sample, region, color);
        rec.source = source;
        values.push_back(rec.f);
        report.records.push_back(std::move(rec));
    }
    report.f = aggregate(values);
    return report;
}

PrecisionReport explanation_precision(const EvalOutputs& outputs, const PrevalenceTable& prevalence,
                                      const std::vector<std::string>& characteristics, double tau,
                                      double threshold) {
    PrecisionReport report;
    report.tau = tau;
    report.threshold = threshold;
    std::vector<MetricValue> correct, incorrect;
    for (size_t i = 0; i < outputs.image_ids.size(); ++i) {
        int predicted_count = 0, overlap = 0;
        for (size_t c = 0; c < characteristics.size(); ++c) {
            if (outputs.char_probs[i][c] < threshold) continue;
            ++predicted_count;
            const Disease dx = static_cast<Disease>(outputs.predicted[i]);
            if (prevalence.at(dx, characteristics[c]) >= tau) ++overlap;
        }
        if (predicted_count == 0) {
            ++report.excluded_no_predictions;
            continue;
        }
        const double precision = static_cast<double>(overlap) / predicted_count;
        (outputs.predicted[i] == outputs.gold[i] ? correct : incorrect).push_back(precision);
    }
    report.correct = aggregate(correct);
    report.incorrect = aggregate(incorrect);
    return report;
}

}  // namespace dermx
