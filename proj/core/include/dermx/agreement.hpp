#ifndef DERMX_AGREEMENT_HPP
#define DERMX_AGREEMENT_HPP

#include <map>
#include <string>
#include <vector>

#include "dermx/metrics.hpp"
#include "dermx/types.hpp"

namespace dermx {

// Per-rater one-vs-rest performance against the gold diagnosis.
struct DiagnosisAgreementRow {
    Disease disease;
    std::map<std::string, BinaryMetrics> per_rater;
    Aggregate f1;           // across raters
    Aggregate sensitivity;
    Aggregate specificity;
    Aggregate selection;    // images per rater carrying this diagnosis
};

struct DiagnosisAgreement {
    std::vector<DiagnosisAgreementRow> rows;  // one per disease, enum order
    Aggregate overall_f1;                     // across the per-disease means
    std::vector<std::string> skipped_raters;  // raters without evaluations
};

DiagnosisAgreement diagnosis_agreement(const std::vector<ImageRecord>& records);

// Pairwise presence/absence agreement per characteristic; selection counts a
// characteristic regardless of the rater's diagnosis correctness.
struct BinaryAgreementRow {
    std::string characteristic;
    Aggregate f1;         // across unordered rater pairs
    Aggregate kappa;
    Aggregate selection;  // mean count of selected images per rater
    int pairs_skipped = 0;  // pairs with no co-evaluated images
};

std::vector<BinaryAgreementRow> binary_agreement(const std::vector<ImageRecord>& records);

// Pairwise fuzzy overlap of outlines, restricted to images both raters
// outlined. Sensitivity/specificity are averaged over both pair orders.
struct LocalizationAgreementRow {
    std::string characteristic;
    Aggregate f1;
    Aggregate sensitivity;
    Aggregate specificity;
    int pair_images = 0;  // co-outlined (pair, image) samples
};

std::vector<LocalizationAgreementRow> localization_agreement(const std::vector<ImageRecord>& records);

struct AgreementReport {
    DiagnosisAgreement diagnosis;
    std::vector<BinaryAgreementRow> characteristic_binary;
    std::vector<LocalizationAgreementRow> characteristic_localization;
    // Recorded analysis choices, emitted in the report header.
    bool localization_requires_correct_diagnosis = false;
};

AgreementReport analyze_agreement(const std::vector<ImageRecord>& records);

}  // namespace dermx

#endif  // DERMX_AGREEMENT_HPP
