#ifndef DERMX_BUNDLE_HPP
#define DERMX_BUNDLE_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "dermx/fusion.hpp"
#include "dermx/types.hpp"

namespace dermx {

// Single-file container: magic, format version, JSON header, blob region.
// Photos and outline masks are PNG-encoded; fuzzy maps are stored as exact
// rater-count numerators plus a denominator.

struct DatasetBundle {
    std::vector<ImageRecord> records;
    CleaningLog log;
};

void write_dataset_bundle(const std::filesystem::path& path, const std::vector<ImageRecord>& records,
                          const CleaningLog& log);
DatasetBundle read_dataset_bundle(const std::filesystem::path& path);

// Self-contained training input: records plus fused targets and prevalence.
struct LabelsBundle {
    std::vector<ImageRecord> records;
    std::vector<FusedLabels> fused;
    std::vector<std::string> characteristics;
    PrevalenceTable prevalence;
    std::string fusion_denominator = "correct";
    int min_samples = 30;
    double min_pairwise_f1 = 0.30;
};

void write_labels_bundle(const std::filesystem::path& path, const LabelsBundle& bundle);
LabelsBundle read_labels_bundle(const std::filesystem::path& path);

// temp-file + rename; every artifact writer goes through this
void atomic_write(const std::filesystem::path& path, const std::string& bytes);

}  // namespace dermx

#endif  // DERMX_BUNDLE_HPP
