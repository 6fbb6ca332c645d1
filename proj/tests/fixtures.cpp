#include "fixtures.hpp"

#include <json.hpp>

#include <unistd.h>

#include <fstream>
#include <random>

#include "dermx/image_io.hpp"

namespace fixtures {

Mask rect_mask(int h, int w, int y0, int x0, int y1, int x1) {
    Mask m(h, w);
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) m.at(y, x) = 1;
    return m;
}

ImageRecord make_record(const std::string& id, Disease gold, Source source, int h, int w,
                        const std::vector<EvalSpec>& evals, std::optional<std::string> patient) {
    ImageRecord rec;
    rec.image_id = id;
    rec.gold_diagnosis = gold;
    rec.source = source;
    rec.patient_id = std::move(patient);
    rec.pixels = Image(h, w, 128);
    for (const auto& spec : evals) {
        Evaluation ev;
        ev.rater_id = spec.rater;
        ev.diagnosis = spec.diagnosis;
        ev.low_quality = spec.low_quality;
        ev.characteristic_masks = spec.masks;
        rec.evaluations.push_back(std::move(ev));
    }
    return rec;
}

std::filesystem::path fresh_temp_dir(const std::string& tag) {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("dermx_test_" + tag + "_" + std::to_string(counter++) + "_" +
                std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

DiskFixture write_annotation_fixture(const std::filesystem::path& dir,
                                     const std::vector<DiskImageSpec>& images) {
    DiskFixture fx;
    fx.root = dir;
    fx.images_root = dir / "data";
    std::filesystem::create_directories(fx.images_root);

    nlohmann::json root;
    root["schema_version"] = "1";
    root["images"] = nlohmann::json::array();
    for (const auto& spec : images) {
        Image img(spec.h, spec.w, 100);
        // deterministic texture so photos are not uniform
        for (int y = 0; y < spec.h; ++y)
            for (int x = 0; x < spec.w; ++x) img.at(y, x, 0) = static_cast<uint8_t>((y * 31 + x * 7) % 256);
        const std::string file_name = spec.image_id + ".png";
        write_image_png(fx.images_root / file_name, img);

        nlohmann::json jimg;
        jimg["image_id"] = spec.image_id;
        jimg["source"] = spec.source;
        jimg["gold_diagnosis"] = spec.gold;
        if (spec.patient_id) jimg["patient_id"] = *spec.patient_id;
        jimg["file_path"] = file_name;
        jimg["evaluations"] = nlohmann::json::array();
        for (const auto& ev : spec.evals) {
            nlohmann::json jeval;
            jeval["rater_id"] = ev.rater;
            jeval["diagnosis"] = to_string(ev.diagnosis);
            jeval["low_quality"] = ev.low_quality;
            jeval["masks"] = nlohmann::json::object();
            for (const auto& [characteristic, mask] : ev.masks) {
                const std::string mask_name =
                    spec.image_id + "_" + ev.rater + "_" + characteristic + ".png";
                write_mask_png(fx.images_root / mask_name, mask);
                jeval["masks"][characteristic] = mask_name;
            }
            jimg["evaluations"].push_back(jeval);
        }
        root["images"].push_back(jimg);
    }
    fx.index = dir / "annotations.json";
    std::ofstream out(fx.index);
    out << root.dump(2) << "\n";
    return fx;
}

BlobDataset make_blob_dataset(int n_images, int side, uint64_t seed) {
    BlobDataset ds;
    ds.characteristic_names = {"disc", "square", "bar"};
    ds.disease_names = {"disc-only", "square-only", "disc-and-bar"};
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> jitter(-2, 2);
    std::uniform_int_distribution<int> noise(-12, 12);

    auto clamp8 = [](int v) { return static_cast<uint8_t>(std::clamp(v, 0, 255)); };

    for (int i = 0; i < n_images; ++i) {
        const int d = i % ds.num_diseases;
        std::vector<uint8_t> z(ds.num_characteristics, 0);
        if (d == 0) z = {1, 0, 0};
        if (d == 1) z = {0, 1, 0};
        if (d == 2) z = {1, 0, 1};

        Image img(side, side);
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x)
                for (int c = 0; c < 3; ++c) img.at(y, x, c) = clamp8(110 + noise(gen));

        std::vector<Grid> masks;
        for (int c = 0; c < ds.num_characteristics; ++c) masks.emplace_back(side, side, 0.0);

        const int q = side / 4;
        if (z[0]) {  // red disc, upper-left quadrant
            const int cy = q + jitter(gen), cx = q + jitter(gen), r = q - 1;
            for (int y = 0; y < side; ++y)
                for (int x = 0; x < side; ++x)
                    if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) {
                        img.at(y, x, 0) = 230;
                        img.at(y, x, 1) = 40;
                        img.at(y, x, 2) = 40;
                        masks[0].at(y, x) = 1.0;
                    }
        }
        if (z[1]) {  // green square, center
            const int y0 = side / 2 - q / 2 + jitter(gen), x0 = side / 2 - q / 2 + jitter(gen);
            for (int y = std::max(0, y0); y < std::min(side, y0 + q); ++y)
                for (int x = std::max(0, x0); x < std::min(side, x0 + q); ++x) {
                    img.at(y, x, 0) = 40;
                    img.at(y, x, 1) = 230;
                    img.at(y, x, 2) = 40;
                    masks[1].at(y, x) = 1.0;
                }
        }
        if (z[2]) {  // blue bar, lower band
            const int y0 = 3 * side / 4 + jitter(gen) / 2;
            for (int y = std::max(0, y0); y < std::min(side, y0 + std::max(2, q / 2)); ++y)
                for (int x = 0; x < side; ++x) {
                    img.at(y, x, 0) = 40;
                    img.at(y, x, 1) = 40;
                    img.at(y, x, 2) = 230;
                    masks[2].at(y, x) = 1.0;
                }
        }
        ds.images.push_back(std::move(img));
        ds.disease.push_back(d);
        ds.z.push_back(std::move(z));
        ds.masks.push_back(std::move(masks));
    }
    return ds;
}

}  // namespace fixtures
