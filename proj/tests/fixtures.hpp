#ifndef DERMX_TESTS_FIXTURES_HPP
#define DERMX_TESTS_FIXTURES_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dermx/grid.hpp"
#include "dermx/image.hpp"
#include "dermx/types.hpp"

namespace fixtures {

using namespace dermx;

Mask rect_mask(int h, int w, int y0, int x0, int y1, int x1);

struct EvalSpec {
    std::string rater;
    Disease diagnosis;
    std::map<std::string, Mask> masks;
    bool low_quality = false;
};

ImageRecord make_record(const std::string& id, Disease gold, Source source, int h, int w,
                        const std::vector<EvalSpec>& evals,
                        std::optional<std::string> patient = std::nullopt);

// On-disk annotation fixture in the published schema.
struct DiskImageSpec {
    std::string image_id;
    std::string source = "DermNetNZ";
    std::string gold = "acne";
    std::optional<std::string> patient_id;
    int h = 8, w = 8;
    std::vector<EvalSpec> evals;
};

struct DiskFixture {
    std::filesystem::path root;
    std::filesystem::path index;
    std::filesystem::path images_root;
};

DiskFixture write_annotation_fixture(const std::filesystem::path& dir,
                                     const std::vector<DiskImageSpec>& images);

std::filesystem::path fresh_temp_dir(const std::string& tag);

// Synthetic training data: colored geometric blobs act as characteristics
// and determine the disease label.
struct BlobDataset {
    std::vector<Image> images;
    std::vector<int> disease;                  // in [0,num_diseases)
    std::vector<std::vector<uint8_t>> z;       // per image, per characteristic
    std::vector<std::vector<Grid>> masks;      // image-resolution {0,1} grids, all C entries
    std::vector<std::string> disease_names;
    std::vector<std::string> characteristic_names;
    int num_diseases = 3;
    int num_characteristics = 3;
};

BlobDataset make_blob_dataset(int n_images, int side, uint64_t seed);

}  // namespace fixtures

#endif  // DERMX_TESTS_FIXTURES_HPP
