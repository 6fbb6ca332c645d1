#include <doctest.h>

#include <fstream>

#include "dermx/bundle.hpp"
#include "dermx/checkpoint.hpp"
#include "dermx/config.hpp"
#include "dermx/fusion.hpp"
#include "dermx/manifest.hpp"
#include "dermx/overlays.hpp"
#include "dermx/reports.hpp"
#include "dermx/sha256.hpp"
#include "fixtures.hpp"

using namespace dermx;

TEST_SUITE_BEGIN("io");

TEST_CASE("sha256 known vectors") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex(std::string(1000, 'a')) ==
          "41edece42d63e8d9bf515a9ba6932e1c20cbc9f5a5d134645adb5db1b9737ea3");
}

TEST_CASE("config parser: values, pairs, comments, duplicate and unknown keys") {
    auto cfg = KeyValueConfig::parse_string(
        "# comment\n"
        "alpha = 1.5\n"
        "name = \"hello\"  # trailing comment\n"
        "flag = true\n"
        "pair = 0.85,1.15\n");
    CHECK(cfg.get_double("alpha", 0) == doctest::Approx(1.5));
    CHECK(cfg.get_string("name", "") == "hello");
    CHECK(cfg.get_bool("flag", false));
    CHECK(cfg.get_pair("pair", {0, 0}).second == doctest::Approx(1.15));
    CHECK_NOTHROW(cfg.finish());

    auto unknown = KeyValueConfig::parse_string("lambda_typo = 3\n");
    CHECK_THROWS_AS(unknown.finish(), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse_string("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse_string("no equals sign\n"), ConfigError);

    auto bad_type = KeyValueConfig::parse_string("alpha = banana\n");
    CHECK_THROWS_AS(bad_type.get_double("alpha", 0), ConfigError);
}

TEST_CASE("dataset bundle round trip") {
    auto dir = fixtures::fresh_temp_dir("bundle_ds");
    std::vector<ImageRecord> records;
    records.push_back(fixtures::make_record(
        "b0", Disease::kAcne, Source::kDermNetNZ, 6, 5,
        {{"r1", Disease::kAcne, {{"plaque", fixtures::rect_mask(6, 5, 0, 0, 3, 3)}}},
         {"r2", Disease::kOther, {}}},
        std::string("patient9")));
    records[0].pixels.at(2, 3, 1) = 200;
    CleaningLog log;
    log.raw_images = 3;
    log.all_other_dropped = 1;
    log.duplicate_patient_dropped = 1;
    log.retained_images = 1;
    log.retained_evaluations = 2;

    const auto path = dir / "ds.bundle";
    write_dataset_bundle(path, records, log);
    DatasetBundle loaded = read_dataset_bundle(path);
    REQUIRE(loaded.records.size() == 1);
    const ImageRecord& rec = loaded.records[0];
    CHECK(rec.image_id == "b0");
    CHECK(rec.source == Source::kDermNetNZ);
    CHECK(rec.gold_diagnosis == Disease::kAcne);
    CHECK(rec.patient_id == std::optional<std::string>("patient9"));
    CHECK(rec.pixels.bytes() == records[0].pixels.bytes());
    REQUIRE(rec.evaluations.size() == 2);
    CHECK(rec.evaluations[0].characteristic_masks.at("plaque").values() ==
          records[0].evaluations[0].characteristic_masks.at("plaque").values());
    CHECK(loaded.log.all_other_dropped == 1);

    CHECK_THROWS_AS(read_labels_bundle(path), SchemaError);  // wrong bundle type
    CHECK_THROWS_AS(read_dataset_bundle(dir / "missing.bundle"), IoError);
}

TEST_CASE("labels bundle round trip preserves exact fuzzy rationals") {
    auto dir = fixtures::fresh_temp_dir("bundle_lb");
    LabelsBundle bundle;
    bundle.characteristics = {"plaque", "scale"};
    bundle.records.push_back(fixtures::make_record(
        "l0", Disease::kPsoriasis, Source::kSD260, 4, 4,
        {{"r1", Disease::kPsoriasis, {{"plaque", fixtures::rect_mask(4, 4, 0, 0, 2, 2)}}},
         {"r2", Disease::kPsoriasis, {{"plaque", fixtures::rect_mask(4, 4, 1, 1, 3, 3)}}},
         {"r3", Disease::kPsoriasis, {{"plaque", fixtures::rect_mask(4, 4, 0, 0, 3, 3)}}}}));
    bundle.fused.push_back(fuse_labels(bundle.records[0], bundle.characteristics));
    bundle.prevalence = prevalence_table(bundle.records, bundle.fused);

    const auto path = dir / "labels.bundle";
    write_labels_bundle(path, bundle);
    LabelsBundle loaded = read_labels_bundle(path);
    REQUIRE(loaded.fused.size() == 1);
    const auto& cm = loaded.fused[0].fuzzy_maps.at("plaque");
    const auto& orig = bundle.fused[0].fuzzy_maps.at("plaque");
    CHECK(cm.denominator == orig.denominator);
    CHECK(cm.counts == orig.counts);  // byte-exact numerators
    CHECK(loaded.fused[0].presence == bundle.fused[0].presence);
    CHECK(loaded.characteristics == bundle.characteristics);
    CHECK(loaded.prevalence.at(Disease::kPsoriasis, "plaque") ==
          doctest::Approx(bundle.prevalence.at(Disease::kPsoriasis, "plaque")));
}

TEST_CASE("checkpoint round trip restores weights, names, and config") {
    auto dir = fixtures::fresh_temp_dir("ckpt");
    DermXConfig cfg;
    cfg.backbone = "tiny-cnn";
    cfg.input_h = cfg.input_w = 32;
    cfg.num_diseases = 3;
    cfg.num_characteristics = 2;
    cfg.dense_width = 8;
    cfg.lambda_a = 10.0;
    DermXModel model(ModelKind::kDermXPlus, cfg);
    model.disease_names = {"a", "b", "c"};
    model.characteristic_names = {"x", "y"};

    const auto path = dir / "model.ckpt";
    save_checkpoint(path, model);
    auto loaded = load_checkpoint(path);
    CHECK(loaded->kind() == ModelKind::kDermXPlus);
    CHECK(loaded->config().backbone == "tiny-cnn");
    CHECK(loaded->config().lambda_a == 10.0);
    CHECK(loaded->disease_names == model.disease_names);
    CHECK(loaded->characteristic_names == model.characteristic_names);
    REQUIRE(loaded->parameters().size() == model.parameters().size());
    for (size_t i = 0; i < model.parameters().size(); ++i) {
        CHECK(loaded->parameters()[i].name == model.parameters()[i].name);
        CHECK(loaded->parameters()[i].tensor.data() == model.parameters()[i].tensor.data());
    }
    // forward passes agree bit-for-bit
    auto ds = fixtures::make_blob_dataset(2, 32, 3);
    ad::NoGradGuard ng;
    ModelOutputs a = model.forward(images_to_tensor(ds.images), false);
    ModelOutputs b = loaded->forward(images_to_tensor(ds.images), false);
    CHECK(a.diagnosis_probs.data() == b.diagnosis_probs.data());

    CHECK_THROWS_AS(load_checkpoint(dir / "nope.ckpt"), IoError);
}

TEST_CASE("pretrained loading requires the cache and a matching file") {
    DermXConfig cfg;
    cfg.backbone = "tiny-cnn";
    cfg.input_h = cfg.input_w = 32;
    cfg.num_diseases = 3;
    cfg.num_characteristics = 2;
    cfg.dense_width = 8;
    DermXModel model(ModelKind::kDermX, cfg);

    unsetenv("DERMXKIT_CACHE");
    CHECK_THROWS_AS(load_pretrained_backbone(model), ConfigError);

    auto dir = fixtures::fresh_temp_dir("cache");
    setenv("DERMXKIT_CACHE", dir.c_str(), 1);
    CHECK_THROWS_AS(load_pretrained_backbone(model), IoError);

    // a checkpoint of a same-backbone model acts as the weight cache entry
    DermXModel donor(ModelKind::kDermX, cfg);
    for (auto& p : donor.parameters())
        for (auto& v : p.tensor.leaf_data()) v += 1.0;
    save_checkpoint(dir / "tiny-cnn.ckpt", donor);
    load_pretrained_backbone(model);
    for (size_t i = 0; i < model.parameters().size(); ++i) {
        const auto& name = model.parameters()[i].name;
        if (name.rfind("backbone.", 0) == 0)
            CHECK(model.parameters()[i].tensor.data() == donor.parameters()[i].tensor.data());
    }
    unsetenv("DERMXKIT_CACHE");
}

TEST_CASE("manifest round trip and directory lock") {
    auto dir = fixtures::fresh_temp_dir("manifest");
    RunManifest m;
    m.command_line = "dermx-kit train --labels x";
    m.config_snapshot = {{"lr", "0.0005"}};
    m.dataset_hash = sha256_hex("data");
    m.fold_plan_hash = "";
    m.seed = 42;
    m.tool_version = "dermx-kit 0.1.0";
    m.started_at = utc_timestamp();
    m.finished_at = utc_timestamp();
    write_manifest(dir, m);
    RunManifest loaded = read_manifest(dir);
    CHECK(loaded.command_line == m.command_line);
    CHECK(loaded.dataset_hash == m.dataset_hash);
    CHECK(loaded.seed == 42);
    CHECK(loaded.config_snapshot.at("lr") == "0.0005");

    {
        DirLock lock(dir);
        CHECK_THROWS_AS(DirLock{dir}, IoError);  // second writer refused
    }
    CHECK_NOTHROW(DirLock{dir});  // released on destruction
}

TEST_CASE("atomic_write leaves no temp file and replaces content") {
    auto dir = fixtures::fresh_temp_dir("atomic");
    const auto path = dir / "out.txt";
    atomic_write(path, "first");
    atomic_write(path, "second");
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == "second");
    CHECK_FALSE(std::filesystem::exists(path.string() + ".tmp"));
}

TEST_CASE("csv reports: stable schemas and NA markers") {
    IdentificationReport ident;
    ident.rows.push_back({"plaque", {0.5}, {0.4}, {0.9}, aggregate(std::vector<double>{0.5}),
                          aggregate(std::vector<double>{0.4}), aggregate(std::vector<double>{0.9}),
                          12});
    ident.mean_f1 = aggregate(std::vector<double>{0.5});
    const std::string csv = csv_identification(ident);
    CHECK(csv.find("# schema=identification.v1") == 0);
    CHECK(csv.find("characteristic,f1_mean,f1_std,") != std::string::npos);
    CHECK(csv.find("plaque,0.500000,0.000000") != std::string::npos);

    PrecisionReport prec;
    prec.tau = 0.05;
    const std::string pcsv = csv_precision(prec);
    CHECK(pcsv.find("correct,NA,NA") != std::string::npos);

    // diagnosis csv parses back into a comparison column
    DiagnosisReport diag;
    for (int d = 0; d < kNumDiseases; ++d) {
        DiagnosisRow row;
        row.disease = static_cast<Disease>(d);
        row.f1 = aggregate(std::vector<double>{0.1 * d});
        diag.rows.push_back(row);
    }
    diag.mean_f1 = aggregate(std::vector<double>{0.25});
    ComparisonColumn col = parse_diagnosis_csv(csv_diagnosis(diag, "dermx"));
    CHECK(col.label == "dermx");
    CHECK(*col.mean_f1 == doctest::Approx(0.25));
    CHECK(*col.per_disease_f1[2] == doctest::Approx(0.2));
}

TEST_CASE("overlays: blank maps give grayscale panels; equal maps zero the difference") {
    auto ds = fixtures::make_blob_dataset(1, 24, 9);
    const Image& photo = ds.images[0];
    Grid zeros(24, 24, 0.0);
    Image blank = render_overlay_image(photo, zeros, zeros);
    REQUIRE(blank.width() == 3 * 24 + 4);
    // panel pixels reduce to the dimmed gray base in all three panels
    for (int p = 0; p < 3; ++p) {
        const int x0 = p * 26;
        for (int y = 0; y < 24; y += 5)
            for (int x = 0; x < 24; x += 5) {
                const double gray = 0.4 * (0.299 * photo.at(y, x, 0) + 0.587 * photo.at(y, x, 1) +
                                           0.114 * photo.at(y, x, 2));
                CHECK(std::abs(blank.at(y, x0 + x, 0) - gray) <= 1.0);
                CHECK(std::abs(blank.at(y, x0 + x, 1) - gray) <= 1.0);
            }
    }

    // equal maps: difference panel matches the blank difference panel
    Grid m(24, 24, 0.0);
    for (int y = 6; y < 12; ++y)
        for (int x = 6; x < 12; ++x) m.at(y, x) = 0.8;
    Image eq = render_overlay_image(photo, m, m);
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 24; ++x)
            for (int c = 0; c < 3; ++c)
                CHECK(eq.at(y, 2 * 26 + x, c) == blank.at(y, 2 * 26 + x, c));

    // planted blob saturates the map panels at the blob
    Image blob = render_overlay_image(photo, m, m);
    CHECK(blob.at(8, 8, 1) > 200);        // expert panel green-hot at the blob
    CHECK(blob.at(8, 26 + 8, 0) > 200);   // model panel red-hot at the blob
}

TEST_SUITE_END();
