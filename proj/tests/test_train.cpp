#include <doctest.h>

#include "dermx/baselines.hpp"
#include "dermx/fusion.hpp"
#include "dermx/train.hpp"
#include "fixtures.hpp"

using namespace dermx;

namespace {

TrainSet blob_train_set(const fixtures::BlobDataset& ds, const DermXConfig& cfg) {
    TrainSet set;
    set.disease_names = ds.disease_names;
    set.characteristic_names = ds.characteristic_names;
    nn::Rng rng(0);
    auto backbone = nn::make_backbone(cfg.backbone, rng);
    const auto [fh, fw] = backbone->feature_hw(cfg.input_h, cfg.input_w);
    for (size_t i = 0; i < ds.images.size(); ++i) {
        TrainSample s;
        s.image_id = "blob" + std::to_string(i);
        s.image = ds.images[i];
        s.disease = ds.disease[i];
        s.z = ds.z[i];
        for (int c = 0; c < ds.num_characteristics; ++c) {
            FuzzyMask full{ds.masks[i][static_cast<size_t>(c)], "", s.image_id};
            s.feature_masks.push_back(downscale_fuzzy(full, fh, fw).values);
            s.image_masks.push_back(ds.masks[i][static_cast<size_t>(c)]);
            s.has_mask.push_back(ds.z[i][static_cast<size_t>(c)]);
        }
        set.samples.push_back(std::move(s));
    }
    return set;
}

DermXConfig blob_config() {
    DermXConfig cfg;
    cfg.backbone = "tiny-cnn";
    cfg.input_h = cfg.input_w = 32;
    cfg.num_diseases = 3;
    cfg.num_characteristics = 3;
    cfg.dense_width = 16;
    cfg.dropout = 0.0;
    return cfg;
}

TrainConfig fast_train_config(int epochs) {
    TrainConfig tc;
    tc.epochs = epochs;
    tc.lr = 3e-3;
    tc.batch_size = 16;
    tc.weight_decay = 1e-4;
    tc.augment_enabled = false;
    tc.seed = 5;
    return tc;
}

}  // namespace

TEST_SUITE_BEGIN("train");

TEST_CASE("train config parses key=value files mirroring field names") {
    auto cfg = KeyValueConfig::parse_string(
        "epochs = 93\n"
        "lr = 0.0005\n"
        "batch_size = 32\n"
        "augmentation.rotation = 10\n"
        "augmentation.scale = 0.85,1.15\n"
        "seed = 7\n");
    TrainConfig tc = TrainConfig::from_config(cfg);
    cfg.finish();
    CHECK(tc.epochs == 93);
    CHECK(tc.lr == doctest::Approx(0.0005));
    CHECK(tc.batch_size == 32);
    CHECK(tc.augmentation.rotation == doctest::Approx(10.0));
    CHECK(tc.augmentation.scale.first == doctest::Approx(0.85));
    CHECK(tc.seed == 7);

    auto bad = KeyValueConfig::parse_string("epochs = 93\nlambda_typo = 1\n");
    TrainConfig::from_config(bad);
    CHECK_THROWS_AS(bad.finish(), ConfigError);
}

TEST_CASE("dermx history carries L_C, dermx+ adds L_A, dx-only has neither") {
    auto ds = fixtures::make_blob_dataset(6, 32, 31);
    DermXConfig cfg = blob_config();
    TrainSet set = blob_train_set(ds, cfg);
    TrainConfig tc = fast_train_config(2);

    DermXModel dermx(ModelKind::kDermX, cfg);
    TrainHistory h1 = train_model(dermx, set, nullptr, tc);
    CHECK(h1.model_kind == "dermx");
    CHECK(h1.lambda_d == 1.0);
    CHECK(h1.lambda_c == 1.0);
    CHECK(h1.lambda_a == 0.0);
    REQUIRE(h1.epochs.size() == 2);
    CHECK(h1.epochs[0].loss_characteristics.has_value());
    CHECK_FALSE(h1.epochs[0].loss_attention.has_value());

    DermXConfig plus_cfg = cfg;
    plus_cfg.lambda_a = 10.0;
    DermXModel plus(ModelKind::kDermXPlus, plus_cfg);
    TrainHistory h2 = train_model(plus, set, nullptr, tc);
    CHECK(h2.lambda_a == 10.0);
    CHECK(h2.epochs[0].loss_attention.has_value());
    // frozen-model mean per-pair attention loss stays in the Dice range
    const double frozen_loss = attention_loss_value(plus, set);
    CHECK(frozen_loss >= 0.0);
    CHECK(frozen_loss <= 1.0 + 1e-9);

    DermXModel dx(ModelKind::kDxOnly, cfg);
    TrainHistory h3 = train_model(dx, set, nullptr, tc);
    CHECK_FALSE(h3.epochs[0].loss_characteristics.has_value());
    CHECK_FALSE(h3.epochs[0].loss_attention.has_value());
    CHECK(h3.lambda_c == 0.0);
}

TEST_CASE("loss decreases on the blob fixture (10-epoch moving average)") {
    auto ds = fixtures::make_blob_dataset(32, 32, 77);
    DermXConfig cfg = blob_config();
    TrainSet set = blob_train_set(ds, cfg);
    TrainConfig tc = fast_train_config(12);
    tc.schedule = "constant";

    DermXModel model(ModelKind::kDermX, cfg);
    TrainHistory history = train_model(model, set, &set, tc);
    double early = 0, late = 0;
    for (int e = 0; e < 4; ++e) early += history.epochs[static_cast<size_t>(e)].loss_diagnosis;
    for (int e = 8; e < 12; ++e) late += history.epochs[static_cast<size_t>(e)].loss_diagnosis;
    CHECK(late < early);
    CHECK(history.epochs.back().val_macro_f1.has_value());
}

TEST_CASE("training is reproducible for a fixed seed") {
    auto ds = fixtures::make_blob_dataset(8, 32, 13);
    DermXConfig cfg = blob_config();
    TrainSet set = blob_train_set(ds, cfg);
    TrainConfig tc = fast_train_config(2);
    tc.augment_enabled = true;

    DermXModel m1(ModelKind::kDermX, cfg);
    DermXModel m2(ModelKind::kDermX, cfg);
    TrainHistory h1 = train_model(m1, set, nullptr, tc);
    TrainHistory h2 = train_model(m2, set, nullptr, tc);
    for (size_t e = 0; e < h1.epochs.size(); ++e) {
        CHECK(h1.epochs[e].loss_diagnosis == h2.epochs[e].loss_diagnosis);
        CHECK(*h1.epochs[e].loss_characteristics == *h2.epochs[e].loss_characteristics);
    }
    for (size_t p = 0; p < m1.parameters().size(); ++p)
        CHECK(m1.parameters()[p].tensor.data() == m2.parameters()[p].tensor.data());
}

TEST_CASE("non-finite loss aborts with the offending batch ids") {
    auto ds = fixtures::make_blob_dataset(4, 32, 3);
    DermXConfig cfg = blob_config();
    TrainSet set = blob_train_set(ds, cfg);
    TrainConfig tc = fast_train_config(1);
    DermXModel model(ModelKind::kDermX, cfg);
    // poison the diagnosis bias so the loss itself goes NaN
    for (auto& p : model.parameters())
        if (p.name == "diag.out.bias")
            p.tensor.leaf_data()[0] = std::numeric_limits<double>::quiet_NaN();
    try {
        train_model(model, set, nullptr, tc);
        FAIL("expected TrainDivergence");
    } catch (const TrainDivergence& e) {
        CHECK_FALSE(e.batch_ids.empty());
        CHECK(std::string(e.what()).find("blob0") != std::string::npos);
    }
}

TEST_CASE("build_train_set resizes photos and downscales fuzzy maps") {
    std::vector<ImageRecord> records;
    std::vector<FusedLabels> fused;
    records.push_back(fixtures::make_record(
        "rec0", Disease::kAcne, Source::kDermNetNZ, 20, 20,
        {{"r1", Disease::kAcne, {{"plaque", fixtures::rect_mask(20, 20, 0, 0, 10, 10)}}}}));
    fused.push_back(fuse_labels(records[0], {"plaque", "scale"}));

    DermXConfig cfg = blob_config();
    cfg.num_characteristics = 2;
    TrainSet set = build_train_set(records, fused, cfg);
    REQUIRE(set.samples.size() == 1);
    const TrainSample& s = set.samples[0];
    CHECK(s.image.height() == 32);
    CHECK(s.image.width() == 32);
    CHECK(s.z == std::vector<uint8_t>{1, 0});
    CHECK(s.has_mask == std::vector<uint8_t>{1, 0});
    CHECK(s.feature_masks[0].height() == 8);
    CHECK(s.image_masks[0].height() == 32);
    CHECK(s.feature_masks[0].max() > 0.0);

    // fold restriction filters samples
    std::vector<std::string> none;
    CHECK(build_train_set(records, fused, cfg, &none).samples.empty());
}

TEST_CASE("interpretable baselines separate a clean synthetic mapping") {
    // presence vectors deterministically identify the disease
    std::vector<FusedLabels> fused;
    for (int i = 0; i < 60; ++i) {
        FusedLabels f;
        f.image_id = "s" + std::to_string(i);
        const int d = i % 3;
        f.gold_diagnosis = static_cast<Disease>(d);
        f.characteristics = {"c0", "c1", "c2"};
        f.presence = {static_cast<uint8_t>(d == 0), static_cast<uint8_t>(d == 1),
                      static_cast<uint8_t>(d == 2)};
        fused.push_back(std::move(f));
    }
    std::vector<std::pair<std::string, Disease>> items;
    for (const auto& f : fused) items.emplace_back(f.image_id, f.gold_diagnosis);
    FoldPlan plan = make_folds(items, 5, 3);

    BaselineReport report = train_interpretable_baselines(fused, plan);
    for (const auto& name : baseline_names()) {
        const auto& result = report.models.at(name);
        REQUIRE(result.macro_f1.mean.has_value());
        CHECK(*result.macro_f1.mean == doctest::Approx(1.0));
    }
}

TEST_CASE("knn flags k larger than the training set") {
    auto knn = make_baseline("knn5");
    std::vector<std::vector<uint8_t>> x = {{1, 0}, {0, 1}, {1, 1}};
    std::vector<int> y = {0, 1, 2};
    CHECK_THROWS_AS(knn->fit(x, y, 3), SchemaError);
}

TEST_CASE("decision tree reaches macro F1 1.0 on separable vectors") {
    auto tree = make_baseline("decision_tree");
    std::vector<std::vector<uint8_t>> x;
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) {
        const int d = i % 3;
        x.push_back({static_cast<uint8_t>(d == 0), static_cast<uint8_t>(d == 1),
                     static_cast<uint8_t>(d == 2)});
        y.push_back(d);
    }
    tree->fit(x, y, 3);
    for (size_t i = 0; i < x.size(); ++i) CHECK(tree->predict(x[i]) == y[i]);
}

TEST_SUITE_END();
