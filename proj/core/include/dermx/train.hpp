#ifndef DERMX_TRAIN_HPP
#define DERMX_TRAIN_HPP

#include <optional>
#include <string>
#include <vector>

#include "dermx/augment.hpp"
#include "dermx/fusion.hpp"
#include "dermx/config.hpp"
#include "dermx/folds.hpp"
#include "dermx/metrics.hpp"
#include "dermx/model.hpp"
#include "dermx/types.hpp"

namespace dermx {

struct TrainConfig {
    int epochs = 93;
    std::string optimizer = "adamw";
    double lr = 0.0005;
    std::string schedule = "cosine_restarts";
    int batch_size = 32;
    double weight_decay = 0.01;
    int restart_period = 10;
    int restart_mult = 2;
    double min_lr = 1e-6;
    bool class_weighting = false;
    bool augment_enabled = true;
    AugmentConfig augmentation;
    uint64_t seed = 0;
    int checkpoint_every = 25;  // epochs; 0 disables periodic checkpoints
    std::string fuzzy_scale = "bilinear";  // or "area", the downscale ablation

    // Keys mirror the field names exactly (augmentation.* for the jitter
    // magnitudes); unknown keys are hard errors at finish().
    static TrainConfig from_config(KeyValueConfig& cfg);
};

struct TrainSample {
    std::string image_id;
    Image image;                      // model input resolution
    int disease = 0;                  // index into disease_names
    std::vector<uint8_t> z;           // one bit per characteristic
    std::vector<Grid> feature_masks;  // feature-resolution fuzzy targets
    std::vector<Grid> image_masks;    // input-resolution fuzzy references (evaluation)
    std::vector<uint8_t> has_mask;    // aligned with the mask vectors
};

struct TrainSet {
    std::vector<TrainSample> samples;
    std::vector<std::string> disease_names;
    std::vector<std::string> characteristic_names;
};

// Resizes photos to the model input and downscales fuzzy maps to the
// feature-map resolution. `restrict_to` limits image ids (fold selection).
TrainSet build_train_set(const std::vector<ImageRecord>& records,
                         const std::vector<FusedLabels>& fused, const DermXConfig& config,
                         const std::vector<std::string>* restrict_to = nullptr,
                         FuzzyScaleMode scale_mode = FuzzyScaleMode::kBilinear);

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double loss_diagnosis = 0.0;
    MetricValue loss_characteristics;  // absent for the Dx-only model
    MetricValue loss_attention;        // present only when guided attention runs
    MetricValue val_macro_f1;
};

struct TrainHistory {
    std::string model_kind;
    double lambda_d = 0, lambda_c = 0, lambda_a = 0;
    std::vector<EpochStats> epochs;
};

// Thrown on non-finite loss; carries the offending batch for diagnosis.
struct TrainDivergence : std::runtime_error {
    explicit TrainDivergence(const std::string& msg, std::vector<std::string> ids)
        : std::runtime_error(msg), batch_ids(std::move(ids)) {}
    std::vector<std::string> batch_ids;
};

using EpochCallback = std::function<void(int epoch, const DermXModel& model)>;

TrainHistory train_model(DermXModel& model, const TrainSet& train_set, const TrainSet* val_set,
                         const TrainConfig& config, const EpochCallback& on_epoch = {});

// Diagnosis macro-F1 of a frozen model over a set (eval mode, no jitter).
double diagnosis_macro_f1(DermXModel& model, const TrainSet& set);
// Characteristic (identification) macro-F1 at threshold 0.5.
double characteristic_macro_f1(DermXModel& model, const TrainSet& set);

// Mean per-pair guided-attention Dice loss of a frozen model over a set.
double attention_loss_value(DermXModel& model, const TrainSet& set);

}  // namespace dermx

#endif  // DERMX_TRAIN_HPP
