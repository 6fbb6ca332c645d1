#include <doctest.h>

#include <random>

#include "dermx/agreement.hpp"
#include "fixtures.hpp"

using namespace dermx;
using fixtures::EvalSpec;
using fixtures::make_record;
using fixtures::rect_mask;

namespace {

// Three raters with a planted confusion over 8 acne + 8 psoriasis images:
//   r1 always matches gold; r2 always matches gold; r3 calls everything acne.
// r1/r2 select "plaque" on psoriasis images; r3 selects "plaque" on even
// image indices regardless of disease.
std::vector<ImageRecord> planted_records() {
    std::vector<ImageRecord> records;
    for (int i = 0; i < 16; ++i) {
        const Disease gold = i < 8 ? Disease::kAcne : Disease::kPsoriasis;
        std::vector<EvalSpec> evals;
        auto with_plaque = [&](bool yes) {
            std::map<std::string, Mask> m;
            if (yes) m["plaque"] = rect_mask(6, 6, 1, 1, 4, 4);
            return m;
        };
        evals.push_back({"r1", gold, with_plaque(gold == Disease::kPsoriasis)});
        evals.push_back({"r2", gold, with_plaque(gold == Disease::kPsoriasis)});
        evals.push_back({"r3", Disease::kAcne, with_plaque(i % 2 == 0)});
        records.push_back(make_record("img" + std::to_string(100 + i), gold,
                                      Source::kDermNetNZ, 6, 6, evals));
    }
    return records;
}

}  // namespace

TEST_SUITE_BEGIN("agreement");

TEST_CASE("single perfect rater scores 1.0 against gold everywhere") {
    std::vector<ImageRecord> records;
    for (int i = 0; i < 6; ++i) {
        const Disease gold = static_cast<Disease>(i % kNumDiseases);
        records.push_back(make_record("img" + std::to_string(i), gold, Source::kSD260, 4, 4,
                                      {{"r1", gold, {}}}));
    }
    DiagnosisAgreement agg = diagnosis_agreement(records);
    for (const auto& row : agg.rows) {
        REQUIRE(row.per_rater.count("r1") == 1);
        const BinaryMetrics& m = row.per_rater.at("r1");
        CHECK(*m.f1 == doctest::Approx(1.0));
        CHECK(*m.sensitivity == doctest::Approx(1.0));
        CHECK(*m.specificity == doctest::Approx(1.0));
    }
    CHECK(*agg.overall_f1.mean == doctest::Approx(1.0));
}

TEST_CASE("planted confusion produces hand-computed diagnosis metrics") {
    DiagnosisAgreement agg = diagnosis_agreement(planted_records());
    // r3 predicts acne for all 16 images; 8 are truly acne:
    // acne one-vs-rest for r3: tp=8 fp=8 fn=0 tn=0 -> f1 = 16/24
    const auto& acne_row = agg.rows[static_cast<size_t>(Disease::kAcne)];
    CHECK(*acne_row.per_rater.at("r3").f1 == doctest::Approx(16.0 / 24.0));
    CHECK(*acne_row.per_rater.at("r3").sensitivity == doctest::Approx(1.0));
    CHECK(*acne_row.per_rater.at("r3").specificity == doctest::Approx(0.0));
    CHECK(*acne_row.per_rater.at("r1").f1 == doctest::Approx(1.0));
    // psoriasis for r3: tp=0 -> f1 = 0
    const auto& pso_row = agg.rows[static_cast<size_t>(Disease::kPsoriasis)];
    CHECK(*pso_row.per_rater.at("r3").f1 == doctest::Approx(0.0));
    // selection counts: r3 selected acne 16 times, r1 8 times
    CHECK(*acne_row.selection.mean == doctest::Approx((16 + 8 + 8) / 3.0));
}

TEST_CASE("pairwise binary agreement matches hand-computed F1 and kappa") {
    auto rows = binary_agreement(planted_records());
    REQUIRE(rows.size() == 1);
    const auto& plaque = rows[0];
    CHECK(plaque.characteristic == "plaque");
    // pairs: (r1,r2) identical selections on 16 images: 8 positives -> f1 1, kappa 1
    // (r1,r3) and (r2,r3): r1 selects the 8 psoriasis images, r3 selects the 8
    // even-indexed: overlap = even psoriasis images = 4
    //   tp=4 fp=4 fn=4 tn=4 -> f1 = 8/16 = 0.5; p_o=0.5, p_e=0.5 -> kappa 0
    // mean f1 = (1 + 0.5 + 0.5)/3
    CHECK(*plaque.f1.mean == doctest::Approx(2.0 / 3.0));
    CHECK(*plaque.kappa.mean == doctest::Approx(1.0 / 3.0));
    // average selection: each rater selected plaque on 8 images
    CHECK(*plaque.selection.mean == doctest::Approx(8.0));
}

TEST_CASE("identical raters give perfect pairwise agreement") {
    std::vector<ImageRecord> records;
    for (int i = 0; i < 10; ++i) {
        std::map<std::string, Mask> masks;
        if (i % 3 != 0) masks["scale"] = rect_mask(5, 5, 0, 0, 3, 3);
        std::vector<EvalSpec> evals = {{"a", Disease::kAcne, masks},
                                       {"b", Disease::kAcne, masks}};
        records.push_back(
            make_record("img" + std::to_string(i), Disease::kAcne, Source::kSD260, 5, 5, evals));
    }
    auto rows = binary_agreement(records);
    REQUIRE(rows.size() == 1);
    CHECK(*rows[0].f1.mean == doctest::Approx(1.0));
    CHECK(*rows[0].kappa.mean == doctest::Approx(1.0));

    auto loc = localization_agreement(records);
    REQUIRE(loc.size() == 1);
    CHECK(*loc[0].f1.mean == doctest::Approx(1.0));
    CHECK(*loc[0].sensitivity.mean == doctest::Approx(1.0));
}

TEST_CASE("localization agreement restricted to co-outlined images") {
    // r1 outlines rows 0..2, r2 outlines rows 1..3 of a 4x4 grid on one image;
    // second image outlined by r1 only (must not contribute)
    std::vector<ImageRecord> records;
    records.push_back(make_record(
        "both", Disease::kAcne, Source::kDermNetNZ, 4, 4,
        {{"r1", Disease::kAcne, {{"patch", rect_mask(4, 4, 0, 0, 3, 4)}}},
         {"r2", Disease::kAcne, {{"patch", rect_mask(4, 4, 1, 0, 4, 4)}}}}));
    records.push_back(make_record(
        "solo", Disease::kAcne, Source::kDermNetNZ, 4, 4,
        {{"r1", Disease::kAcne, {{"patch", rect_mask(4, 4, 0, 0, 1, 1)}}},
         {"r2", Disease::kAcne, {}}}));

    auto rows = localization_agreement(records);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].pair_images == 1);
    // masks: 12 pixels each, intersection rows 1..2 = 8 -> dice = 16/24
    CHECK(*rows[0].f1.mean == doctest::Approx(16.0 / 24.0));
    // directional sensitivities both = 8/12, averaged unchanged
    CHECK(*rows[0].sensitivity.mean == doctest::Approx(8.0 / 12.0));

    // never co-outlined characteristic: undefined rows
    records[1].evaluations[1].characteristic_masks["lonely"] = rect_mask(4, 4, 0, 0, 2, 2);
    auto rows2 = localization_agreement(records);
    for (const auto& row : rows2)
        if (row.characteristic == "lonely") {
            CHECK_FALSE(row.f1.mean.has_value());
            CHECK(row.pair_images == 0);
        }
}

TEST_CASE("pairwise stats invariant to rater enumeration order") {
    auto records = planted_records();
    auto base = binary_agreement(records);
    // rename raters so enumeration order flips, same structure
    for (auto& rec : records)
        for (auto& ev : rec.evaluations) {
            if (ev.rater_id == "r1") ev.rater_id = "z9";
            else if (ev.rater_id == "r3") ev.rater_id = "a0";
        }
    auto renamed = binary_agreement(records);
    REQUIRE(base.size() == renamed.size());
    CHECK(*base[0].f1.mean == doctest::Approx(*renamed[0].f1.mean));
    CHECK(*base[0].kappa.mean == doctest::Approx(*renamed[0].kappa.mean));
    CHECK(*base[0].f1.std == doctest::Approx(*renamed[0].f1.std));
}

TEST_CASE("adding a clone of an existing rater never lowers mean pairwise F1") {
    std::mt19937_64 gen(55);
    std::uniform_int_distribution<int> coin(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<ImageRecord> records;
        std::vector<std::map<std::string, Mask>> r1_masks, r2_masks;
        for (int i = 0; i < 12; ++i) {
            std::map<std::string, Mask> m1, m2;
            if (coin(gen)) m1["papule"] = rect_mask(4, 4, 0, 0, 2, 2);
            if (coin(gen)) m2["papule"] = rect_mask(4, 4, 1, 1, 3, 3);
            r1_masks.push_back(m1);
            r2_masks.push_back(m2);
            records.push_back(make_record("img" + std::to_string(i), Disease::kAcne,
                                          Source::kDermNetNZ, 4, 4,
                                          {{"r1", Disease::kAcne, m1}, {"r2", Disease::kAcne, m2}}));
        }
        auto base = binary_agreement(records);
        if (!base[0].f1.mean.has_value()) continue;

        for (int i = 0; i < 12; ++i)
            records[i].evaluations.push_back({"r1clone", Disease::kAcne, false, r1_masks[i]});
        auto with_clone = binary_agreement(records);
        if (with_clone[0].f1.mean.has_value())
            CHECK(*with_clone[0].f1.mean >= *base[0].f1.mean - 1e-12);
    }
}

TEST_CASE("chance rater on a minority class: specificity >= sensitivity") {
    // chance = base-rate matched: the rater assigns "vitiligo" to exactly 2 of
    // 20 images (true prevalence). Brute force over every such assignment.
    const int n = 20, positives = 2;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            std::vector<ImageRecord> records;
            for (int k = 0; k < n; ++k) {
                const Disease gold = k < positives ? Disease::kVitiligo : Disease::kAcne;
                const Disease pred = (k == i || k == j) ? Disease::kVitiligo : Disease::kAcne;
                records.push_back(make_record("img" + std::to_string(k), gold, Source::kSD260, 4,
                                              4, {{"chance", pred, {}}}));
            }
            DiagnosisAgreement agg = diagnosis_agreement(records);
            const auto& vit =
                agg.rows[static_cast<size_t>(Disease::kVitiligo)].per_rater.at("chance");
            REQUIRE(vit.sensitivity.has_value());
            REQUIRE(vit.specificity.has_value());
            CHECK(*vit.specificity >= *vit.sensitivity);
        }
    }
}

TEST_SUITE_END();
