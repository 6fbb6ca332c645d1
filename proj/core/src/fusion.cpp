#include "dermx/fusion.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "dermx/errors.hpp"
#include "dermx/metrics.hpp"
#include "dermx/resample.hpp"

namespace dermx {

namespace {

bool selected(const Evaluation& ev, const std::string& characteristic) {
    auto it = ev.characteristic_masks.find(characteristic);
    return it != ev.characteristic_masks.end() && it->second.any();
}

}  // namespace

FusedLabels fuse_labels(const ImageRecord& record, const std::vector<std::string>& retained,
                        const FusionOptions& options) {
    if (retained.empty()) throw SchemaError("fuse_labels requires a non-empty retained set");
    FusedLabels out;
    out.image_id = record.image_id;
    out.gold_diagnosis = record.gold_diagnosis;
    out.characteristics = retained;
    out.presence.assign(retained.size(), 0);

    std::vector<const Evaluation*> contributors;
    for (const auto& ev : record.evaluations)
        if (ev.diagnosis == record.gold_diagnosis) contributors.push_back(&ev);
    if (contributors.empty()) return out;  // diagnosis head still trains on such images

    const int denom = options.denominator == FusionDenominator::kCorrect
                          ? static_cast<int>(contributors.size())
                          : static_cast<int>(record.evaluations.size());

    const int h = record.pixels.height(), w = record.pixels.width();
    for (size_t ci = 0; ci < retained.size(); ++ci) {
        const std::string& characteristic = retained[ci];
        FusedLabels::CountMap cm;
        cm.h = h;
        cm.w = w;
        cm.counts.assign(static_cast<size_t>(h) * w, 0);
        cm.denominator = denom;
        bool any = false;
        for (const auto* ev : contributors) {
            auto it = ev->characteristic_masks.find(characteristic);
            if (it == ev->characteristic_masks.end() || !it->second.any()) continue;
            any = true;
            const auto& mask = it->second.values();
            for (size_t p = 0; p < mask.size(); ++p) cm.counts[p] += mask[p] ? 1 : 0;
        }
        if (any) {
            out.presence[ci] = 1;
            out.fuzzy_maps.emplace(characteristic, std::move(cm));
        }
    }
    return out;
}

std::vector<std::string> characteristic_universe(const std::vector<ImageRecord>& records) {
    std::set<std::string> names;
    for (const auto& rec : records)
        for (const auto& ev : rec.evaluations)
            for (const auto& [characteristic, mask] : ev.characteristic_masks) names.insert(characteristic);
    return {names.begin(), names.end()};
}

std::vector<std::pair<std::string, int>> characteristic_sample_counts(
    const std::vector<ImageRecord>& records) {
    std::vector<std::pair<std::string, int>> out;
    for (const auto& name : characteristic_universe(records)) {
        int samples = 0;
        for (const auto& rec : records) {
            bool hit = false;
            for (const auto& ev : rec.evaluations)
                if (ev.diagnosis == rec.gold_diagnosis && selected(ev, name)) hit = true;
            samples += hit;
        }
        out.emplace_back(name, samples);
    }
    return out;
}

std::vector<std::string> select_characteristics(const std::vector<ImageRecord>& records,
                                                int min_samples, double min_pairwise_f1) {
    std::vector<std::string> kept;
    for (const auto& [name, samples] : characteristic_sample_counts(records)) {
        if (samples < min_samples) continue;
        if (min_pairwise_f1 > 0.0) {
            // mean pairwise binary F1 over raters, selection regardless of
            // diagnosis correctness (rater-behavior semantics)
            std::map<std::string, std::map<std::string, bool>> by_rater;  // rater -> image -> selected
            for (const auto& rec : records)
                for (const auto& ev : rec.evaluations)
                    by_rater[ev.rater_id][rec.image_id] = selected(ev, name);
            std::vector<MetricValue> pair_f1;
            for (auto a = by_rater.begin(); a != by_rater.end(); ++a) {
                for (auto b = std::next(a); b != by_rater.end(); ++b) {
                    std::vector<uint8_t> va, vb;
                    for (const auto& [image_id, sel_a] : a->second) {
                        auto it = b->second.find(image_id);
                        if (it == b->second.end()) continue;
                        va.push_back(sel_a ? 1 : 0);
                        vb.push_back(it->second ? 1 : 0);
                    }
                    if (va.empty()) continue;
                    pair_f1.push_back(binary_prf(va, vb).f1);
                }
            }
            const Aggregate agg = aggregate(pair_f1);
            if (!agg.mean.has_value() || *agg.mean < min_pairwise_f1) continue;
        }
        kept.push_back(name);
    }
    return kept;
}

FuzzyMask downscale_fuzzy(const FuzzyMask& mask, int target_h, int target_w, FuzzyScaleMode mode) {
    FuzzyMask out;
    out.characteristic = mask.characteristic;
    out.image_id = mask.image_id;
    out.values = mode == FuzzyScaleMode::kBilinear ? resize_bilinear(mask.values, target_h, target_w)
                                                   : resize_area(mask.values, target_h, target_w);
    for (auto& v : out.values.values()) v = std::clamp(v, 0.0, 1.0);
    return out;
}

PrevalenceTable prevalence_table(const std::vector<ImageRecord>& records,
                                 const std::vector<FusedLabels>& fused) {
    if (fused.empty()) throw SchemaError("prevalence_table requires fused labels");
    PrevalenceTable table;
    table.characteristics = fused.front().characteristics;
    for (auto& row : table.rows) row.assign(table.characteristics.size(), 0.0);

    std::array<int, kNumDiseases> correct_evals{};
    std::array<std::vector<int>, kNumDiseases> selections;
    for (auto& s : selections) s.assign(table.characteristics.size(), 0);

    for (const auto& rec : records) {
        const auto d = static_cast<size_t>(rec.gold_diagnosis);
        for (const auto& ev : rec.evaluations) {
            if (ev.diagnosis != rec.gold_diagnosis) continue;
            ++correct_evals[d];
            for (size_t ci = 0; ci < table.characteristics.size(); ++ci)
                if (selected(ev, table.characteristics[ci])) ++selections[d][ci];
        }
    }
    for (size_t d = 0; d < kNumDiseases; ++d) {
        if (correct_evals[d] == 0) {
            table.zero_evaluation_diseases.push_back(static_cast<Disease>(d));
            continue;
        }
        for (size_t ci = 0; ci < table.characteristics.size(); ++ci)
            table.rows[d][ci] = static_cast<double>(selections[d][ci]) / correct_evals[d];
    }
    return table;
}

}  // namespace dermx
