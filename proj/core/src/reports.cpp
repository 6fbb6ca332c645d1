#include "dermx/reports.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>

#include "dermx/errors.hpp"

namespace dermx {

namespace {

std::string fmt(double v, int decimals = 6) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

std::string agg2(const Aggregate& a) {
    return format_metric(a.mean) + "," + format_metric(a.std);
}

}  // namespace

std::string format_metric(const MetricValue& value) {
    return value.has_value() ? fmt(*value) : "NA";
}

DiagnosisReport diagnosis_report(const std::vector<EvalOutputs>& folds) {
    DiagnosisReport report;
    std::vector<std::vector<MetricValue>> per_disease_f1(kNumDiseases), per_disease_sens(kNumDiseases),
        per_disease_spec(kNumDiseases);
    std::vector<MetricValue> fold_means;
    for (const auto& fold : folds) {
        std::vector<MetricValue> this_fold;
        for (int d = 0; d < kNumDiseases; ++d) {
            std::vector<uint8_t> pred, target;
            bool any = false;
            for (size_t i = 0; i < fold.image_ids.size(); ++i) {
                pred.push_back(fold.predicted[i] == d);
                target.push_back(fold.gold[i] == d);
                any = any || fold.gold[i] == d;
            }
            if (!any) {
                per_disease_f1[d].push_back(std::nullopt);
                per_disease_sens[d].push_back(std::nullopt);
                per_disease_spec[d].push_back(std::nullopt);
                continue;
            }
            BinaryMetrics m = binary_prf(pred, target);
            per_disease_f1[d].push_back(m.f1);
            per_disease_sens[d].push_back(m.sensitivity);
            per_disease_spec[d].push_back(m.specificity);
            this_fold.push_back(m.f1);
        }
        fold_means.push_back(aggregate(this_fold).mean);
    }
    for (int d = 0; d < kNumDiseases; ++d) {
        DiagnosisRow row;
        row.disease = static_cast<Disease>(d);
        row.f1 = aggregate(per_disease_f1[d]);
        row.sensitivity = aggregate(per_disease_sens[d]);
        row.specificity = aggregate(per_disease_spec[d]);
        report.rows.push_back(std::move(row));
    }
    report.mean_f1 = aggregate(fold_means);
    return report;
}

std::string csv_diagnosis(const DiagnosisReport& report, const std::string& model_label) {
    std::ostringstream os;
    os << "# schema=diagnosis.v1 model=" << model_label << "\n";
    os << "disease,f1_mean,f1_std,sensitivity_mean,sensitivity_std,specificity_mean,specificity_std\n";
    for (const auto& row : report.rows)
        os << to_string(row.disease) << "," << agg2(row.f1) << "," << agg2(row.sensitivity) << ","
           << agg2(row.specificity) << "\n";
    os << "mean," << agg2(report.mean_f1) << ",NA,NA,NA,NA\n";
    return os.str();
}

std::string csv_identification(const IdentificationReport& report) {
    std::ostringstream os;
    os << "# schema=identification.v1 threshold=" << fmt(report.threshold, 2) << "\n";
    os << "characteristic,f1_mean,f1_std,sensitivity_mean,sensitivity_std,"
          "specificity_mean,specificity_std,samples\n";
    for (const auto& row : report.rows)
        os << row.characteristic << "," << agg2(row.f1) << "," << agg2(row.sensitivity) << ","
           << agg2(row.specificity) << "," << row.samples << "\n";
    os << "mean," << agg2(report.mean_f1) << ",NA,NA,NA,NA,\n";
    return os.str();
}

std::string csv_localization(const LocalizationReport& report) {
    std::ostringstream os;
    os << "# schema=localization.v1 mode="
       << (report.mode == LocalizationMode::kAgreedOnly ? "agreed_only" : "all_labeled")
       << " resolution=" << (report.resolution == EvalResolution::kImage ? "image" : "feature")
       << " pooling="
       << (report.pooling == LocalizationPooling::kPerImage ? "per_image" : "pooled") << "\n";
    os << "characteristic,sensitivity_mean,sensitivity_std,specificity_mean,specificity_std,"
          "f1_mean,f1_std,samples,skipped_missing_mask\n";
    for (const auto& row : report.rows)
        os << row.characteristic << "," << agg2(row.sensitivity) << "," << agg2(row.specificity)
           << "," << agg2(row.f1) << "," << row.samples << "," << row.skipped_missing_mask << "\n";
    os << "mean," << agg2(report.mean_sensitivity) << "," << agg2(report.mean_specificity) << ","
       << agg2(report.mean_f1) << ",,\n";
    return os.str();
}

std::string csv_faithfulness(const FaithfulnessReport& report) {
    std::ostringstream os;
    os << "# schema=faithfulness.v1 source="
       << (report.source == OcclusionSource::kModel ? "model" : "expert") << " fill="
       << (report.fill == OcclusionFill::kBlack ? "black" : "dataset_mean") << " f_mean="
       << format_metric(report.f.mean) << " f_std=" << format_metric(report.f.std) << "\n";
    os << "image_id,predicted_class,m_x,m_xe,f\n";
    for (const auto& rec : report.records)
        os << rec.image_id << "," << rec.predicted_class << "," << fmt(rec.m_x) << ","
           << fmt(rec.m_xe) << "," << fmt(rec.f) << "\n";
    return os.str();
}

std::string csv_precision(const PrecisionReport& report) {
    std::ostringstream os;
    os << "# schema=precision.v1 tau=" << fmt(report.tau, 3) << " threshold="
       << fmt(report.threshold, 2) << "\n";
    os << "group,precision_mean,precision_std,images,excluded_no_predictions\n";
    os << "correct," << agg2(report.correct) << "," << report.correct.defined << ","
       << report.excluded_no_predictions << "\n";
    os << "incorrect," << agg2(report.incorrect) << "," << report.incorrect.defined << ",\n";
    return os.str();
}

std::string csv_dataset_stats(const DatasetStats& stats) {
    std::ostringstream os;
    os << "# schema=dataset_stats.v1\n";
    os << "source";
    for (int d = 0; d < kNumDiseases; ++d) os << "," << to_string(static_cast<Disease>(d));
    os << ",total\n";
    for (int s = 0; s < 2; ++s) {
        os << to_string(static_cast<Source>(s));
        for (int d = 0; d < kNumDiseases; ++d) os << "," << stats.counts[s][d];
        os << "," << stats.source_total(static_cast<Source>(s)) << "\n";
    }
    os << "total";
    for (int d = 0; d < kNumDiseases; ++d) os << "," << stats.disease_total(static_cast<Disease>(d));
    os << "," << stats.grand_total() << "\n";
    return os.str();
}

std::string csv_cleaning_log(const CleaningLog& log) {
    std::ostringstream os;
    os << "# schema=cleaning_log.v1\n";
    os << "counter,value\n";
    os << "raw_images," << log.raw_images << "\n";
    os << "all_other_dropped," << log.all_other_dropped << "\n";
    os << "duplicate_patient_dropped," << log.duplicate_patient_dropped << "\n";
    os << "zero_evaluation_dropped," << log.zero_evaluation_dropped << "\n";
    os << "low_quality_evaluations_dropped," << log.low_quality_evaluations_dropped << "\n";
    os << "retained_images," << log.retained_images << "\n";
    os << "retained_evaluations," << log.retained_evaluations << "\n";
    return os.str();
}

std::string csv_sample_counts(const std::vector<std::pair<std::string, int>>& counts) {
    std::ostringstream os;
    os << "# schema=sample_counts.v1\n";
    os << "characteristic,samples\n";
    for (const auto& [name, n] : counts) os << name << "," << n << "\n";
    return os.str();
}

std::string csv_prevalence(const PrevalenceTable& table) {
    std::ostringstream os;
    os << "# schema=prevalence.v1\n";
    os << "characteristic";
    for (int d = 0; d < kNumDiseases; ++d) os << "," << to_string(static_cast<Disease>(d));
    os << "\n";
    for (size_t c = 0; c < table.characteristics.size(); ++c) {
        os << table.characteristics[c];
        for (int d = 0; d < kNumDiseases; ++d) os << "," << fmt(table.rows[d][c], 2);
        os << "\n";
    }
    return os.str();
}

std::string csv_history(const TrainHistory& history) {
    std::ostringstream os;
    os << "# schema=history.v1 model=" << history.model_kind << " lambda_d=" << fmt(history.lambda_d, 3)
       << " lambda_c=" << fmt(history.lambda_c, 3) << " lambda_a=" << fmt(history.lambda_a, 3)
       << "\n";
    os << "epoch,lr,loss_diagnosis,loss_characteristics,loss_attention,val_macro_f1\n";
    for (const auto& e : history.epochs)
        os << e.epoch << "," << fmt(e.lr, 8) << "," << fmt(e.loss_diagnosis) << ","
           << format_metric(e.loss_characteristics) << "," << format_metric(e.loss_attention) << ","
           << format_metric(e.val_macro_f1) << "\n";
    return os.str();
}

std::string csv_baselines(const BaselineReport& report) {
    std::ostringstream os;
    os << "# schema=baselines.v1\n";
    os << "model,macro_f1_mean,macro_f1_std,folds,folds_with_missing_class\n";
    for (const auto& [name, result] : report.models)
        os << name << "," << agg2(result.macro_f1) << "," << result.per_fold_macro_f1.size() << ","
           << result.folds_with_missing_class.size() << "\n";
    return os.str();
}

std::string csv_agreement_diagnosis(const DiagnosisAgreement& agreement) {
    std::ostringstream os;
    os << "# schema=agreement_diagnosis.v1\n";
    os << "disease,f1_mean,f1_std,sensitivity_mean,sensitivity_std,specificity_mean,"
          "specificity_std,selection_mean,selection_std\n";
    for (const auto& row : agreement.rows)
        os << to_string(row.disease) << "," << agg2(row.f1) << "," << agg2(row.sensitivity) << ","
           << agg2(row.specificity) << "," << agg2(row.selection) << "\n";
    os << "mean," << agg2(agreement.overall_f1) << ",NA,NA,NA,NA,NA,NA\n";
    return os.str();
}

std::string csv_agreement_binary(const std::vector<BinaryAgreementRow>& rows) {
    std::ostringstream os;
    os << "# schema=agreement_binary.v1\n";
    os << "characteristic,f1_mean,f1_std,kappa_mean,kappa_std,selection_mean,selection_std\n";
    for (const auto& row : rows)
        os << row.characteristic << "," << agg2(row.f1) << "," << agg2(row.kappa) << ","
           << agg2(row.selection) << "\n";
    return os.str();
}

std::string csv_agreement_localization(const std::vector<LocalizationAgreementRow>& rows) {
    std::ostringstream os;
    os << "# schema=agreement_localization.v1\n";
    os << "characteristic,f1_mean,f1_std,sensitivity_mean,sensitivity_std,"
          "specificity_mean,specificity_std,pair_images\n";
    for (const auto& row : rows)
        os << row.characteristic << "," << agg2(row.f1) << "," << agg2(row.sensitivity) << ","
           << agg2(row.specificity) << "," << row.pair_images << "\n";
    return os.str();
}

std::string json_agreement(const AgreementReport& report) {
    nlohmann::json j;
    j["localization_requires_correct_diagnosis"] = report.localization_requires_correct_diagnosis;
    auto agg = [](const Aggregate& a) {
        nlohmann::json out;
        out["mean"] = a.mean.has_value() ? nlohmann::json(*a.mean) : nlohmann::json();
        out["std"] = a.std.has_value() ? nlohmann::json(*a.std) : nlohmann::json();
        out["defined"] = a.defined;
        out["excluded"] = a.excluded;
        return out;
    };
    j["diagnosis"] = nlohmann::json::array();
    for (const auto& row : report.diagnosis.rows) {
        nlohmann::json jr;
        jr["disease"] = to_string(row.disease);
        jr["f1"] = agg(row.f1);
        jr["sensitivity"] = agg(row.sensitivity);
        jr["specificity"] = agg(row.specificity);
        jr["selection"] = agg(row.selection);
        nlohmann::json per_rater = nlohmann::json::object();
        for (const auto& [rater, m] : row.per_rater) {
            per_rater[rater] = {{"f1", m.f1.has_value() ? nlohmann::json(*m.f1) : nlohmann::json()},
                                {"sensitivity", m.sensitivity.has_value()
                                                    ? nlohmann::json(*m.sensitivity)
                                                    : nlohmann::json()},
                                {"specificity", m.specificity.has_value()
                                                    ? nlohmann::json(*m.specificity)
                                                    : nlohmann::json()},
                                {"support", m.support}};
        }
        jr["per_rater"] = std::move(per_rater);
        j["diagnosis"].push_back(std::move(jr));
    }
    j["diagnosis_overall_f1"] = agg(report.diagnosis.overall_f1);
    j["characteristic_binary"] = nlohmann::json::array();
    for (const auto& row : report.characteristic_binary)
        j["characteristic_binary"].push_back({{"characteristic", row.characteristic},
                                              {"f1", agg(row.f1)},
                                              {"kappa", agg(row.kappa)},
                                              {"selection", agg(row.selection)},
                                              {"pairs_skipped", row.pairs_skipped}});
    j["characteristic_localization"] = nlohmann::json::array();
    for (const auto& row : report.characteristic_localization)
        j["characteristic_localization"].push_back({{"characteristic", row.characteristic},
                                                    {"f1", agg(row.f1)},
                                                    {"sensitivity", agg(row.sensitivity)},
                                                    {"specificity", agg(row.specificity)},
                                                    {"pair_images", row.pair_images}});
    return j.dump(2) + "\n";
}

std::string csv_comparison(const std::vector<ComparisonColumn>& columns) {
    std::ostringstream os;
    os << "# schema=comparison.v1\n";
    os << "disease";
    for (const auto& col : columns) os << "," << col.label << "_f1_mean," << col.label << "_f1_std";
    os << "\n";
    for (int d = 0; d < kNumDiseases; ++d) {
        os << to_string(static_cast<Disease>(d));
        for (const auto& col : columns)
            os << "," << format_metric(col.per_disease_f1[d]) << ","
               << format_metric(col.per_disease_std[d]);
        os << "\n";
    }
    os << "mean";
    for (const auto& col : columns)
        os << "," << format_metric(col.mean_f1) << "," << format_metric(col.mean_std);
    os << "\n";
    return os.str();
}

ComparisonColumn parse_diagnosis_csv(const std::string& csv) {
    ComparisonColumn col;
    col.per_disease_f1.assign(kNumDiseases, std::nullopt);
    col.per_disease_std.assign(kNumDiseases, std::nullopt);
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind("# schema=diagnosis.v1", 0) == 0) {
            const auto pos = line.find("model=");
            if (pos != std::string::npos) col.label = line.substr(pos + 6);
            continue;
        }
        if (line.empty() || line.rfind("disease,", 0) == 0) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (cells.size() < 3) continue;
        auto parse = [](const std::string& s) -> MetricValue {
            if (s == "NA" || s.empty()) return std::nullopt;
            return std::stod(s);
        };
        if (cells[0] == "mean") {
            col.mean_f1 = parse(cells[1]);
            col.mean_std = parse(cells[2]);
            continue;
        }
        for (int d = 0; d < kNumDiseases; ++d)
            if (cells[0] == to_string(static_cast<Disease>(d))) {
                col.per_disease_f1[d] = parse(cells[1]);
                col.per_disease_std[d] = parse(cells[2]);
            }
    }
    if (col.label.empty()) throw SchemaError("diagnosis csv lacks a model stamp");
    return col;
}

}  // namespace dermx
