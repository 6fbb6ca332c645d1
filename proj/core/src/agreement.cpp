#include "dermx/agreement.hpp"

#include <algorithm>
#include <set>

#include "dermx/errors.hpp"
#include "dermx/fusion.hpp"

namespace dermx {

namespace {

bool outlined(const Evaluation& ev, const std::string& characteristic) {
    auto it = ev.characteristic_masks.find(characteristic);
    return it != ev.characteristic_masks.end() && it->second.any();
}

// rater -> image_id -> evaluation
using RaterIndex = std::map<std::string, std::map<std::string, const Evaluation*>>;

RaterIndex index_raters(const std::vector<ImageRecord>& records) {
    RaterIndex idx;
    for (const auto& rec : records)
        for (const auto& ev : rec.evaluations) idx[ev.rater_id][rec.image_id] = &ev;
    return idx;
}

}  // namespace

DiagnosisAgreement diagnosis_agreement(const std::vector<ImageRecord>& records) {
    DiagnosisAgreement out;
    const RaterIndex raters = index_raters(records);

    std::map<std::string, Disease> gold;
    for (const auto& rec : records) gold[rec.image_id] = rec.gold_diagnosis;

    std::vector<MetricValue> disease_means;
    for (int d = 0; d < kNumDiseases; ++d) {
        const Disease disease = static_cast<Disease>(d);
        DiagnosisAgreementRow row;
        row.disease = disease;
        std::vector<MetricValue> f1s, sens, specs;
        std::vector<double> selections;
        for (const auto& [rater_id, evals] : raters) {
            if (evals.empty()) {
                out.skipped_raters.push_back(rater_id);
                continue;
            }
            std::vector<uint8_t> pred, target;
            int selected_count = 0;
            for (const auto& [image_id, ev] : evals) {
                const bool p = ev->diagnosis == disease;
                pred.push_back(p ? 1 : 0);
                target.push_back(gold.at(image_id) == disease ? 1 : 0);
                selected_count += p;
            }
            BinaryMetrics m = binary_prf(pred, target);
            f1s.push_back(m.f1);
            sens.push_back(m.sensitivity);
            specs.push_back(m.specificity);
            selections.push_back(static_cast<double>(selected_count));
            row.per_rater[rater_id] = m;
        }
        row.f1 = aggregate(f1s);
        row.sensitivity = aggregate(sens);
        row.specificity = aggregate(specs);
        row.selection = aggregate(selections);
        disease_means.push_back(row.f1.mean);
        out.rows.push_back(std::move(row));
    }
    out.overall_f1 = aggregate(disease_means);
    // dedupe skipped raters collected once per disease loop
    std::sort(out.skipped_raters.begin(), out.skipped_raters.end());
    out.skipped_raters.erase(std::unique(out.skipped_raters.begin(), out.skipped_raters.end()),
                             out.skipped_raters.end());
    return out;
}

std::vector<BinaryAgreementRow> binary_agreement(const std::vector<ImageRecord>& records) {
    const RaterIndex raters = index_raters(records);
    if (raters.size() < 2) throw SchemaError("binary_agreement requires >= 2 raters");

    std::vector<BinaryAgreementRow> out;
    for (const auto& characteristic : characteristic_universe(records)) {
        BinaryAgreementRow row;
        row.characteristic = characteristic;
        std::vector<MetricValue> f1s, kappas;
        for (auto a = raters.begin(); a != raters.end(); ++a) {
            for (auto b = std::next(a); b != raters.end(); ++b) {
                std::vector<uint8_t> va, vb;
                for (const auto& [image_id, ev_a] : a->second) {
                    auto it = b->second.find(image_id);
                    if (it == b->second.end()) continue;
                    va.push_back(outlined(*ev_a, characteristic) ? 1 : 0);
                    vb.push_back(outlined(*it->second, characteristic) ? 1 : 0);
                }
                if (va.empty()) {
                    ++row.pairs_skipped;
                    continue;
                }
                f1s.push_back(binary_prf(va, vb).f1);
                kappas.push_back(cohens_kappa(va, vb));
            }
        }
        std::vector<double> selections;
        for (const auto& [rater_id, evals] : raters) {
            int n = 0;
            for (const auto& [image_id, ev] : evals) n += outlined(*ev, characteristic);
            selections.push_back(static_cast<double>(n));
        }
        row.f1 = aggregate(f1s);
        row.kappa = aggregate(kappas);
        row.selection = aggregate(selections);
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<LocalizationAgreementRow> localization_agreement(const std::vector<ImageRecord>& records) {
    const RaterIndex raters = index_raters(records);
    if (raters.size() < 2) throw SchemaError("localization_agreement requires >= 2 raters");

    std::vector<LocalizationAgreementRow> out;
    for (const auto& characteristic : characteristic_universe(records)) {
        LocalizationAgreementRow row;
        row.characteristic = characteristic;
        std::vector<MetricValue> f1s, sens, specs;
        for (auto a = raters.begin(); a != raters.end(); ++a) {
            for (auto b = std::next(a); b != raters.end(); ++b) {
                std::vector<MetricValue> pf1, psens, pspec;
                for (const auto& [image_id, ev_a] : a->second) {
                    auto it = b->second.find(image_id);
                    if (it == b->second.end()) continue;
                    const Evaluation* ev_b = it->second;
                    if (!outlined(*ev_a, characteristic) || !outlined(*ev_b, characteristic)) continue;
                    const Grid ga = ev_a->characteristic_masks.at(characteristic).to_grid();
                    const Grid gb = ev_b->characteristic_masks.at(characteristic).to_grid();
                    pf1.push_back(fuzzy_f1(ga, gb));
                    // both directions averaged; the paper reports one symmetric-looking number
                    const MetricValue s_ab = fuzzy_sensitivity(ga, gb), s_ba = fuzzy_sensitivity(gb, ga);
                    const MetricValue p_ab = fuzzy_specificity(ga, gb), p_ba = fuzzy_specificity(gb, ga);
                    if (s_ab && s_ba) psens.push_back((*s_ab + *s_ba) / 2.0);
                    if (p_ab && p_ba) pspec.push_back((*p_ab + *p_ba) / 2.0);
                    ++row.pair_images;
                }
                if (pf1.empty()) continue;
                f1s.push_back(aggregate(pf1).mean);
                sens.push_back(aggregate(psens).mean);
                specs.push_back(aggregate(pspec).mean);
            }
        }
        row.f1 = aggregate(f1s);
        row.sensitivity = aggregate(sens);
        row.specificity = aggregate(specs);
        out.push_back(std::move(row));
    }
    return out;
}

AgreementReport analyze_agreement(const std::vector<ImageRecord>& records) {
    AgreementReport report;
    report.diagnosis = diagnosis_agreement(records);
    report.characteristic_binary = binary_agreement(records);
    report.characteristic_localization = localization_agreement(records);
    return report;
}

}  // namespace dermx
