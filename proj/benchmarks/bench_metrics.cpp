#include <benchmark/benchmark.h>

#include <random>

#include "dermx/metrics.hpp"

using namespace dermx;

namespace {

Grid random_grid(int side, uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Grid g(side, side);
    for (size_t i = 0; i < g.size(); ++i) g[i] = u(gen);
    return g;
}

void BM_FuzzyF1(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    Grid a = random_grid(side, 1), m = random_grid(side, 2);
    for (auto _ : state) benchmark::DoNotOptimize(fuzzy_f1(a, m));
    state.SetItemsProcessed(state.iterations() * a.size());
}
BENCHMARK(BM_FuzzyF1)->Arg(9)->Arg(64)->Arg(260)->Arg(512);

void BM_FuzzyTriple(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    Grid a = random_grid(side, 3), m = random_grid(side, 4);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fuzzy_f1(a, m));
        benchmark::DoNotOptimize(fuzzy_sensitivity(a, m));
        benchmark::DoNotOptimize(fuzzy_specificity(a, m));
    }
}
BENCHMARK(BM_FuzzyTriple)->Arg(260);

void BM_BinaryPrf(benchmark::State& state) {
    std::mt19937_64 gen(5);
    std::bernoulli_distribution bit(0.3);
    const size_t n = static_cast<size_t>(state.range(0));
    std::vector<uint8_t> pred(n), target(n);
    for (size_t i = 0; i < n; ++i) {
        pred[i] = bit(gen);
        target[i] = bit(gen);
    }
    for (auto _ : state) benchmark::DoNotOptimize(binary_prf(pred, target));
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_BinaryPrf)->Arg(1000)->Arg(100000);

void BM_CohensKappa(benchmark::State& state) {
    std::mt19937_64 gen(7);
    std::bernoulli_distribution bit(0.4);
    std::vector<uint8_t> a(10000), b(10000);
    for (size_t i = 0; i < a.size(); ++i) {
        a[i] = bit(gen);
        b[i] = bit(gen);
    }
    for (auto _ : state) benchmark::DoNotOptimize(cohens_kappa(a, b));
}
BENCHMARK(BM_CohensKappa);

}  // namespace
