#ifndef DERMX_TYPES_HPP
#define DERMX_TYPES_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dermx/grid.hpp"
#include "dermx/image.hpp"

namespace dermx {

// The six target conditions. kOther marks evaluations outside them; it is
// never a gold label of a retained record.
enum class Disease : uint8_t {
    kAcne = 0,
    kActinicKeratosis,
    kPsoriasis,
    kSeborrheicDermatitis,
    kViralWarts,
    kVitiligo,
    kOther,
};

constexpr int kNumDiseases = 6;

const std::array<std::string, 7>& disease_names();
Disease disease_from_name(const std::string& name);
const std::string& to_string(Disease d);

enum class Source : uint8_t { kDermNetNZ = 0, kSD260 = 1 };
Source source_from_name(const std::string& name);
const std::string& to_string(Source s);

// One rater's assessment of one image.
struct Evaluation {
    std::string rater_id;
    Disease diagnosis = Disease::kOther;
    bool low_quality = false;
    // characteristic name -> binary outline, image-sized
    std::map<std::string, Mask> characteristic_masks;
};

// Canonical post-cleaning record.
struct ImageRecord {
    std::string image_id;
    Source source = Source::kDermNetNZ;
    Disease gold_diagnosis = Disease::kOther;
    std::optional<std::string> patient_id;
    Image pixels;
    std::vector<Evaluation> evaluations;
};

struct CleaningLog {
    int raw_images = 0;
    int all_other_dropped = 0;
    int duplicate_patient_dropped = 0;
    int zero_evaluation_dropped = 0;
    int low_quality_evaluations_dropped = 0;
    int retained_images = 0;
    int retained_evaluations = 0;
};

// Training targets for one image.
struct FusedLabels {
    std::string image_id;
    Disease gold_diagnosis = Disease::kOther;
    std::vector<std::string> characteristics;  // retained set, fixed order
    std::vector<uint8_t> presence;             // z, aligned with characteristics
    // Exact rational fuzzy maps: value = counts[p] / denominator.
    struct CountMap {
        int h = 0, w = 0;
        std::vector<uint8_t> counts;
        int denominator = 0;
        Grid to_grid() const {
            Grid g(h, w);
            for (size_t i = 0; i < counts.size(); ++i)
                g[i] = denominator > 0 ? static_cast<double>(counts[i]) / denominator : 0.0;
            return g;
        }
    };
    std::map<std::string, CountMap> fuzzy_maps;  // only characteristics with presence=1 and outlines

    bool present(const std::string& characteristic) const {
        for (size_t i = 0; i < characteristics.size(); ++i)
            if (characteristics[i] == characteristic) return presence[i] != 0;
        return false;
    }
};

// disease x characteristic fraction table, values in [0,1].
struct PrevalenceTable {
    std::vector<std::string> characteristics;
    // row = disease index (0..5), col aligned with characteristics
    std::array<std::vector<double>, kNumDiseases> rows;
    std::vector<Disease> zero_evaluation_diseases;  // rows emitted as zeros with a warning

    double at(Disease d, const std::string& characteristic) const;
};

}  // namespace dermx

#endif  // DERMX_TYPES_HPP
