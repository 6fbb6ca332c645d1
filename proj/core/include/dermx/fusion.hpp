#ifndef DERMX_FUSION_HPP
#define DERMX_FUSION_HPP

#include <string>
#include <vector>

#include "dermx/types.hpp"

namespace dermx {

// Denominator population for the fuzzy fraction. kCorrect divides by the
// raters whose diagnosis matched gold (values reach 1.0 under unanimity);
// kAll divides by every retained rater of the image.
enum class FusionDenominator { kCorrect, kAll };

enum class FuzzyScaleMode { kBilinear, kArea };

struct FusionOptions {
    FusionDenominator denominator = FusionDenominator::kCorrect;
};

// Builds training targets for one image. Only evaluations whose diagnosis
// equals the gold label contribute. A characteristic is present iff at least
// one contributing rater drew a non-empty outline for it; the fuzzy value of
// a pixel is (covering contributors) / denominator.
FusedLabels fuse_labels(const ImageRecord& record, const std::vector<std::string>& retained,
                        const FusionOptions& options = {});

// Characteristics kept for modeling: dataset-wide sample count (images whose
// presence bit would be 1) >= min_samples, and mean pairwise inter-rater
// binary F1 >= min_pairwise_f1. A threshold <= 0 is vacuous.
std::vector<std::string> select_characteristics(const std::vector<ImageRecord>& records,
                                                int min_samples = 30,
                                                double min_pairwise_f1 = 0.30);

// All characteristic names appearing in any retained evaluation, sorted.
std::vector<std::string> characteristic_universe(const std::vector<ImageRecord>& records);

// Per-image sample counts behind select_characteristics (CSV sidecar data).
std::vector<std::pair<std::string, int>> characteristic_sample_counts(
    const std::vector<ImageRecord>& records);

// Linear rescaling of a fuzzy map, output clamped to [0,1]. Upscaling uses
// the same interpolation.
FuzzyMask downscale_fuzzy(const FuzzyMask& mask, int target_h, int target_w,
                          FuzzyScaleMode mode = FuzzyScaleMode::kBilinear);

// entry(d, c) = fraction of correct-diagnosis evaluations of disease-d
// images that selected characteristic c.
PrevalenceTable prevalence_table(const std::vector<ImageRecord>& records,
                                 const std::vector<FusedLabels>& fused);

}  // namespace dermx

#endif  // DERMX_FUSION_HPP
