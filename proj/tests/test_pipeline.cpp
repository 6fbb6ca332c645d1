#include <doctest.h>

#include <random>
#include <set>

#include "dermx/augment.hpp"
#include "dermx/folds.hpp"
#include "dermx/optim.hpp"
#include "fixtures.hpp"

using namespace dermx;

namespace {

std::vector<std::pair<std::string, Disease>> synthetic_items(int n, uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> dis(0, kNumDiseases - 1);
    std::vector<std::pair<std::string, Disease>> items;
    for (int i = 0; i < n; ++i)
        items.emplace_back("img" + std::to_string(i), static_cast<Disease>(dis(gen)));
    return items;
}

}  // namespace

TEST_SUITE_BEGIN("pipeline");

TEST_CASE("fold plan: disjoint cover with per-class and total imbalance <= 1") {
    // 554 items spread like the real class distribution
    std::vector<std::pair<std::string, Disease>> items;
    const int counts[kNumDiseases] = {119, 91, 98, 94, 66, 86};
    int id = 0;
    for (int d = 0; d < kNumDiseases; ++d)
        for (int i = 0; i < counts[d]; ++i)
            items.emplace_back("img" + std::to_string(1000 + id++), static_cast<Disease>(d));
    REQUIRE(items.size() == 554);

    FoldPlan plan = make_folds(items, 10, 7);
    auto members = plan.members();
    std::set<std::string> seen;
    for (const auto& fold : members)
        for (const auto& m : fold) CHECK(seen.insert(m).second);
    CHECK(seen.size() == 554);

    // fold sizes forced into {55, 56} by 554 = 10*55 + 4
    for (const auto& fold : members) CHECK((fold.size() == 55 || fold.size() == 56));

    // per-class imbalance <= 1
    std::map<Disease, int> gold;
    for (const auto& [id_, d] : items) gold[Disease{}];
    for (int d = 0; d < kNumDiseases; ++d) {
        std::vector<int> per_fold(10, 0);
        for (const auto& [iid, dd] : items)
            if (static_cast<int>(dd) == d) ++per_fold[plan.fold_of(iid)];
        const int mx = *std::max_element(per_fold.begin(), per_fold.end());
        const int mn = *std::min_element(per_fold.begin(), per_fold.end());
        CHECK(mx - mn <= 1);
    }
}

TEST_CASE("fold plan invariants hold on 20 random synthetic datasets") {
    std::mt19937_64 meta(13);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 20 + static_cast<int>(meta() % 400);
        const int k = 2 + static_cast<int>(meta() % 9);
        auto items = synthetic_items(n, meta());
        FoldPlan plan = make_folds(items, k, meta());

        CHECK(static_cast<int>(plan.assignments.size()) == n);
        std::vector<int> totals(static_cast<size_t>(k), 0);
        for (const auto& [id, fold] : plan.assignments) {
            REQUIRE(fold >= 0);
            REQUIRE(fold < k);
            ++totals[static_cast<size_t>(fold)];
        }
        for (int d = 0; d < kNumDiseases; ++d) {
            std::vector<int> per_fold(static_cast<size_t>(k), 0);
            for (const auto& [id, dd] : items)
                if (static_cast<int>(dd) == d) ++per_fold[static_cast<size_t>(plan.fold_of(id))];
            const int mx = *std::max_element(per_fold.begin(), per_fold.end());
            const int mn = *std::min_element(per_fold.begin(), per_fold.end());
            CHECK(mx - mn <= 1);
        }
    }
}

TEST_CASE("fold plan is deterministic and input-order independent") {
    auto items = synthetic_items(101, 3);
    FoldPlan a = make_folds(items, 10, 42);
    FoldPlan b = make_folds(items, 10, 42);
    CHECK(a.assignments == b.assignments);

    std::mt19937_64 gen(5);
    std::shuffle(items.begin(), items.end(), gen);
    FoldPlan c = make_folds(items, 10, 42);
    CHECK(a.assignments == c.assignments);

    FoldPlan d = make_folds(items, 10, 43);
    CHECK(a.assignments != d.assignments);
}

TEST_CASE("divisible class splits exactly evenly") {
    std::vector<std::pair<std::string, Disease>> items;
    for (int i = 0; i < 60; ++i)
        items.emplace_back("img" + std::to_string(i), Disease::kPsoriasis);
    FoldPlan plan = make_folds(items, 10, 1);
    std::vector<int> per_fold(10, 0);
    for (const auto& [id, fold] : plan.assignments) ++per_fold[static_cast<size_t>(fold)];
    for (int f = 0; f < 10; ++f) CHECK(per_fold[static_cast<size_t>(f)] == 6);
}

TEST_CASE("fold plan json round trip") {
    auto dir = fixtures::fresh_temp_dir("folds");
    FoldPlan plan = make_folds(synthetic_items(37, 8), 5, 99);
    save_fold_plan(dir / "plan.json", plan);
    FoldPlan loaded = load_fold_plan(dir / "plan.json");
    CHECK(loaded.seed == plan.seed);
    CHECK(loaded.k == plan.k);
    CHECK(loaded.assignments == plan.assignments);
}

TEST_CASE("augment: zero magnitudes are the exact identity") {
    Image img(16, 16, 0);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            img.at(y, x, 0) = static_cast<uint8_t>(x * 16);
            img.at(y, x, 1) = static_cast<uint8_t>(y * 16);
            img.at(y, x, 2) = static_cast<uint8_t>((x + y) * 8);
        }
    std::mt19937_64 rng(1);
    Image out = augment(img, AugmentConfig::identity(), rng);
    CHECK(out.bytes() == img.bytes());
}

TEST_CASE("augment: fixed rng seed reproduces the output exactly") {
    fixtures::BlobDataset ds = fixtures::make_blob_dataset(1, 32, 5);
    AugmentConfig cfg;  // full jitter
    auto r1 = augment_rng(7, 3, "imgX");
    auto r2 = augment_rng(7, 3, "imgX");
    Image a = augment(ds.images[0], cfg, r1);
    Image b = augment(ds.images[0], cfg, r2);
    CHECK(a.bytes() == b.bytes());

    auto r3 = augment_rng(7, 4, "imgX");
    Image c = augment(ds.images[0], cfg, r3);
    CHECK(a.bytes() != c.bytes());
}

TEST_CASE("augment: rotation-only keeps mean brightness within 1%") {
    fixtures::BlobDataset ds = fixtures::make_blob_dataset(1, 48, 11);
    AugmentConfig cfg = AugmentConfig::identity();
    cfg.rotation = 10.0;
    auto mean_of = [](const Image& im) {
        double s = 0;
        for (uint8_t b : im.bytes()) s += b;
        return s / im.bytes().size();
    };
    std::mt19937_64 rng(3);
    for (int i = 0; i < 5; ++i) {
        Image out = augment(ds.images[0], cfg, rng);
        CHECK(mean_of(out) == doctest::Approx(mean_of(ds.images[0])).epsilon(0.01));
    }
}

TEST_CASE("augment preserves dimensions and pixel range under full jitter") {
    fixtures::BlobDataset ds = fixtures::make_blob_dataset(1, 24, 21);
    AugmentConfig cfg;
    std::mt19937_64 rng(17);
    for (int i = 0; i < 10; ++i) {
        Image out = augment(ds.images[0], cfg, rng);
        CHECK(out.height() == 24);
        CHECK(out.width() == 24);
    }
}

TEST_CASE("cosine warm restarts schedule") {
    CosineRestarts sched(0.0005, 10, 2, 1e-6);
    CHECK(sched.lr_at(0) == doctest::Approx(0.0005));
    // end of first period approaches min_lr, then restarts
    CHECK(sched.lr_at(9) < 2e-5);
    CHECK(sched.lr_at(10) == doctest::Approx(0.0005));
    // second period spans 10..30
    CHECK(sched.lr_at(29) < 2e-5);
    CHECK(sched.lr_at(30) == doctest::Approx(0.0005));
    // halfway through a period sits at the midpoint
    CHECK(sched.lr_at(5) == doctest::Approx(1e-6 + 0.5 * (0.0005 - 1e-6)));
    for (int e = 0; e < 93; ++e) {
        CHECK(sched.lr_at(e) <= 0.0005 + 1e-12);
        CHECK(sched.lr_at(e) >= 1e-6 - 1e-12);
    }
}

TEST_CASE("adamw: single step matches the hand-computed update") {
    std::vector<nn::Parameter> params;
    params.push_back({"w", ad::Tensor::param({2}, {1.0, -2.0})});
    AdamW opt(params, /*lr=*/0.1, /*weight_decay=*/0.01);
    opt.step({ad::Tensor::constant({2}, {0.5, -0.5})});
    // t=1: mhat = g, vhat = g^2 -> update = lr*(g/(|g|+eps) + wd*p)
    const double expected0 = 1.0 - 0.1 * (0.5 / (0.5 + 1e-8) + 0.01 * 1.0);
    const double expected1 = -2.0 - 0.1 * (-0.5 / (0.5 + 1e-8) + 0.01 * -2.0);
    CHECK(params[0].tensor.data()[0] == doctest::Approx(expected0).epsilon(1e-9));
    CHECK(params[0].tensor.data()[1] == doctest::Approx(expected1).epsilon(1e-9));
}

TEST_SUITE_END();
