#include <benchmark/benchmark.h>

#include <random>

#include "dermx/fusion.hpp"

using namespace dermx;

namespace {

ImageRecord synthetic_record(int side, int raters, uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_int_distribution<int> corner(0, side / 2);
    ImageRecord rec;
    rec.image_id = "bench";
    rec.gold_diagnosis = Disease::kPsoriasis;
    rec.pixels = Image(side, side, 100);
    for (int r = 0; r < raters; ++r) {
        Evaluation ev;
        ev.rater_id = "r" + std::to_string(r);
        ev.diagnosis = r % 4 == 3 ? Disease::kAcne : Disease::kPsoriasis;
        Mask m(side, side);
        const int y0 = corner(gen), x0 = corner(gen);
        for (int y = y0; y < y0 + side / 2; ++y)
            for (int x = x0; x < x0 + side / 2; ++x) m.at(y, x) = 1;
        ev.characteristic_masks["plaque"] = std::move(m);
        rec.evaluations.push_back(std::move(ev));
    }
    return rec;
}

void BM_FuseLabels(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    ImageRecord rec = synthetic_record(side, 8, 11);
    const std::vector<std::string> retained = {"plaque", "scale"};
    for (auto _ : state) benchmark::DoNotOptimize(fuse_labels(rec, retained));
    state.SetItemsProcessed(state.iterations() * static_cast<size_t>(side) * side);
}
BENCHMARK(BM_FuseLabels)->Arg(128)->Arg(512);

void BM_DownscaleFuzzy(benchmark::State& state) {
    ImageRecord rec = synthetic_record(512, 8, 13);
    FusedLabels fused = fuse_labels(rec, {"plaque"});
    FuzzyMask mask{fused.fuzzy_maps.at("plaque").to_grid(), "plaque", "bench"};
    for (auto _ : state) benchmark::DoNotOptimize(downscale_fuzzy(mask, 9, 9));
}
BENCHMARK(BM_DownscaleFuzzy);

void BM_PrevalenceTable(benchmark::State& state) {
    std::vector<ImageRecord> records;
    std::vector<FusedLabels> fused;
    for (int i = 0; i < 64; ++i) {
        records.push_back(synthetic_record(64, 8, 100 + i));
        records.back().image_id = "img" + std::to_string(i);
        fused.push_back(fuse_labels(records.back(), {"plaque", "scale"}));
    }
    for (auto _ : state) benchmark::DoNotOptimize(prevalence_table(records, fused));
}
BENCHMARK(BM_PrevalenceTable);

}  // namespace
