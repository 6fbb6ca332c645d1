#ifndef DERMX_INGEST_HPP
#define DERMX_INGEST_HPP

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dermx/types.hpp"

namespace dermx {

// Parsed annotation index before cleaning. Masks stay on disk until
// clean_dataset materializes records.
struct RawEvaluation {
    std::string rater_id;
    Disease diagnosis = Disease::kOther;
    bool low_quality = false;
    std::map<std::string, std::filesystem::path> mask_paths;  // characteristic -> file
};

struct RawImageEntry {
    std::string image_id;
    Source source = Source::kDermNetNZ;
    Disease gold_diagnosis = Disease::kOther;
    std::optional<std::string> patient_id;
    std::filesystem::path file_path;  // relative to the images root
    std::vector<RawEvaluation> evaluations;
};

struct RawAnnotationFile {
    std::string schema_version;
    std::filesystem::path images_root;
    std::vector<RawImageEntry> images;
};

// Parses and validates the JSON annotation index. Checks: key sets, enum
// values, image_id uniqueness, non-empty rater ids, mask files present on
// disk, low-quality evaluations carrying no masks. Violations throw
// SchemaError naming the offending image/rater/characteristic.
RawAnnotationFile parse_annotations(const std::filesystem::path& index_path,
                                    const std::filesystem::path& images_root);

struct CleanResult {
    std::vector<ImageRecord> records;
    CleaningLog log;
};

// Applies the cleaning rules in order: (a) drop images whose evaluations all
// carry diagnosis "other"; (b) keep only the lexicographically first image
// per patient_id; (c) drop low-quality evaluations; images left without
// evaluations are logged and dropped. Loads pixels and masks, validating
// mask dimensions against the photo.
CleanResult clean_dataset(const RawAnnotationFile& raw);

struct DatasetStats {
    // counts[source][disease]
    std::array<std::array<int, kNumDiseases>, 2> counts{};

    int disease_total(Disease d) const {
        return counts[0][static_cast<size_t>(d)] + counts[1][static_cast<size_t>(d)];
    }
    int source_total(Source s) const {
        int t = 0;
        for (int c : counts[static_cast<size_t>(s)]) t += c;
        return t;
    }
    int grand_total() const { return source_total(Source::kDermNetNZ) + source_total(Source::kSD260); }
};

DatasetStats dataset_stats(const std::vector<ImageRecord>& records);

}  // namespace dermx

#endif  // DERMX_INGEST_HPP
