#ifndef DERMX_EXPLAIN_EVAL_HPP
#define DERMX_EXPLAIN_EVAL_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dermx/metrics.hpp"
#include "dermx/model.hpp"
#include "dermx/train.hpp"
#include "dermx/types.hpp"

namespace dermx {

// Frozen-model predictions over one evaluation set.
struct EvalOutputs {
    std::vector<std::string> image_ids;
    std::vector<int> gold;
    std::vector<int> predicted;
    std::vector<double> predicted_prob;           // probability of the argmax class
    std::vector<std::vector<double>> char_probs;  // (N,C)
    std::vector<std::vector<uint8_t>> z;          // labels, (N,C)
};

EvalOutputs evaluate_outputs(DermXModel& model, const TrainSet& set);

// One backbone pass, one attention map per class of the chosen head.
std::vector<AttentionMap> grad_cam_all(DermXModel& model, const Image& image, GradCamHead head);

// --- identification -------------------------------------------------------

struct IdentificationRow {
    std::string characteristic;
    std::vector<MetricValue> fold_f1, fold_sensitivity, fold_specificity;
    Aggregate f1, sensitivity, specificity;
    int samples = 0;  // images labeled positive across folds
};

struct IdentificationReport {
    std::vector<IdentificationRow> rows;
    Aggregate mean_f1;  // across per-fold characteristic means
    double threshold = 0.5;
};

// folds: one EvalOutputs per fold (a single entry is a 1-fold report).
IdentificationReport identification_report(const std::vector<EvalOutputs>& folds,
                                           const std::vector<std::string>& characteristics,
                                           double threshold = 0.5);

// --- localization ----------------------------------------------------------

enum class LocalizationMode { kAgreedOnly, kAllLabeled };
enum class EvalResolution { kImage, kFeature };
// per-(image,characteristic) averaging vs pooling all pixels per characteristic
enum class LocalizationPooling { kPerImage, kPooled };

struct LocalizationRow {
    std::string characteristic;
    Aggregate f1, sensitivity, specificity;  // across folds
    int samples = 0;
    int skipped_missing_mask = 0;
};

struct LocalizationReport {
    std::vector<LocalizationRow> rows;
    Aggregate mean_f1, mean_sensitivity, mean_specificity;
    LocalizationMode mode;
    EvalResolution resolution;
    LocalizationPooling pooling = LocalizationPooling::kPerImage;
};

// Per (image, characteristic): the model's Grad-CAM vs the fuzzy reference.
// kAgreedOnly keeps pairs with prediction >= threshold AND label 1;
// kAllLabeled keeps label-1 pairs regardless of the prediction.
LocalizationReport localization_report(DermXModel& model,
                                       const std::vector<const TrainSet*>& folds,
                                       LocalizationMode mode,
                                       EvalResolution resolution = EvalResolution::kImage,
                                       double threshold = 0.5,
                                       LocalizationPooling pooling = LocalizationPooling::kPerImage);

// --- faithfulness ----------------------------------------------------------

enum class OcclusionSource { kModel, kExpert };
enum class OcclusionFill { kDatasetMean, kBlack };

struct FaithfulnessRecord {
    std::string image_id;
    int predicted_class = 0;
    double m_x = 0.0;   // predicted-class probability on the original image
    double m_xe = 0.0;  // same class on the contrastive image
    double f = 0.0;     // m_x - m_xe
    OcclusionSource source = OcclusionSource::kModel;
    Mask occlusion_union;  // exactly the region replaced in x_e
};

Image occlude(const Image& image, const Mask& region, const std::array<uint8_t, 3>& fill);
std::array<uint8_t, 3> dataset_mean_color(const TrainSet& set);

// Explanation outlines for occlusion: model-derived Grad-CAM binarized at
// 0.5 x per-map max (predicted-positive characteristics), or the union of
// expert fuzzy masks (label-positive characteristics).
Mask explanation_union(DermXModel& model, const TrainSample& sample, OcclusionSource source,
                       double threshold = 0.5);

FaithfulnessRecord faithfulness(DermXModel& model, const TrainSample& sample,
                                const Mask& outlines_union,
                                const std::array<uint8_t, 3>& fill);

struct FaithfulnessReport {
    std::vector<FaithfulnessRecord> records;
    Aggregate f;  // mean +/- std of F over images
    OcclusionSource source;
    OcclusionFill fill;
};

FaithfulnessReport faithfulness_report(DermXModel& model, const TrainSet& set,
                                       OcclusionSource source, OcclusionFill fill,
                                       double binarize_threshold = 0.5);

// --- explanation precision ---------------------------------------------------

struct PrecisionReport {
    Aggregate correct;    // images whose diagnosis prediction matched gold
    Aggregate incorrect;  // and those that did not
    int excluded_no_predictions = 0;
    double tau = 0.05;
    double threshold = 0.5;
};

// Expected explanation of a diagnosis: characteristics whose prevalence for
// that diagnosis is >= tau. Precision = |predicted AND expected| / |predicted|.
PrecisionReport explanation_precision(const EvalOutputs& outputs, const PrevalenceTable& prevalence,
                                      const std::vector<std::string>& characteristics,
                                      double tau = 0.05, double threshold = 0.5);

}  // namespace dermx

#endif  // DERMX_EXPLAIN_EVAL_HPP
