#ifndef DERMX_REPORTS_HPP
#define DERMX_REPORTS_HPP

#include <string>
#include <vector>

#include "dermx/agreement.hpp"
#include "dermx/baselines.hpp"
#include "dermx/explain_eval.hpp"
#include "dermx/ingest.hpp"
#include "dermx/train.hpp"

namespace dermx {

// Every CSV starts with a `# schema=<name>.v1 ...` stamp line; column sets
// are fixed per report type. Undefined metrics serialize as NA.

struct DiagnosisRow {
    Disease disease;
    Aggregate f1, sensitivity, specificity;
};

struct DiagnosisReport {
    std::vector<DiagnosisRow> rows;
    Aggregate mean_f1;
};

DiagnosisReport diagnosis_report(const std::vector<EvalOutputs>& folds);

std::string csv_diagnosis(const DiagnosisReport& report, const std::string& model_label);
std::string csv_identification(const IdentificationReport& report);
std::string csv_localization(const LocalizationReport& report);
std::string csv_faithfulness(const FaithfulnessReport& report);
std::string csv_precision(const PrecisionReport& report);
std::string csv_dataset_stats(const DatasetStats& stats);
std::string csv_cleaning_log(const CleaningLog& log);
std::string csv_sample_counts(const std::vector<std::pair<std::string, int>>& counts);
std::string csv_prevalence(const PrevalenceTable& table);  // rounded to 2 decimals
std::string csv_history(const TrainHistory& history);
std::string csv_baselines(const BaselineReport& report);

std::string csv_agreement_diagnosis(const DiagnosisAgreement& agreement);
std::string csv_agreement_binary(const std::vector<BinaryAgreementRow>& rows);
std::string csv_agreement_localization(const std::vector<LocalizationAgreementRow>& rows);
std::string json_agreement(const AgreementReport& report);

// Table-style model comparison: one row per disease plus Mean, one column
// per run label (Dx/DermX/DermX+/Expert).
struct ComparisonColumn {
    std::string label;
    std::vector<MetricValue> per_disease_f1;  // kNumDiseases entries
    std::vector<MetricValue> per_disease_std;
    MetricValue mean_f1, mean_std;
};

std::string csv_comparison(const std::vector<ComparisonColumn>& columns);

// Parses a diagnosis.csv back into a comparison column (report subcommand).
ComparisonColumn parse_diagnosis_csv(const std::string& csv);

std::string format_metric(const MetricValue& value);

}  // namespace dermx

#endif  // DERMX_REPORTS_HPP
