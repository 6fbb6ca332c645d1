#include <benchmark/benchmark.h>

#include <random>

#include "dermx/explain_eval.hpp"
#include "dermx/model.hpp"

using namespace dermx;

namespace {

DermXConfig tiny_config(int side) {
    DermXConfig cfg;
    cfg.backbone = "tiny-cnn";
    cfg.input_h = cfg.input_w = side;
    cfg.num_diseases = 3;
    cfg.num_characteristics = 3;
    cfg.dense_width = 16;
    cfg.dropout = 0.0;
    return cfg;
}

ad::Tensor random_batch(int n, int side, uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(static_cast<size_t>(n) * 3 * side * side);
    for (auto& x : v) x = u(gen);
    return ad::Tensor::constant({n, 3, side, side}, std::move(v));
}

void BM_TinyForward(benchmark::State& state) {
    DermXModel model(ModelKind::kDermX, tiny_config(32));
    ad::Tensor batch = random_batch(static_cast<int>(state.range(0)), 32, 3);
    for (auto _ : state) {
        ad::NoGradGuard ng;
        benchmark::DoNotOptimize(model.forward(batch, false));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TinyForward)->Arg(1)->Arg(16)->Arg(32);

void BM_TinyForwardBackward(benchmark::State& state) {
    DermXModel model(ModelKind::kDermX, tiny_config(32));
    ad::Tensor batch = random_batch(16, 32, 5);
    std::vector<double> onehot(16 * 3, 0.0);
    for (int i = 0; i < 16; ++i) onehot[i * 3 + i % 3] = 1.0;
    ad::Tensor y = ad::Tensor::constant({16, 3}, onehot);
    std::vector<ad::Tensor> params;
    for (auto& p : model.parameters()) params.push_back(p.tensor);
    for (auto _ : state) {
        ModelOutputs out = model.forward(batch, true);
        ad::Tensor loss = loss_diagnosis(out.diagnosis_probs, y);
        benchmark::DoNotOptimize(ad::grad(loss, params, false));
    }
}
BENCHMARK(BM_TinyForwardBackward);

void BM_GradCamPerImage(benchmark::State& state) {
    DermXModel model(ModelKind::kDermX, tiny_config(32));
    Image img(32, 32, 0);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) img.at(y, x, 0) = static_cast<uint8_t>((x * y) % 256);
    for (auto _ : state)
        benchmark::DoNotOptimize(grad_cam_all(model, img, GradCamHead::kCharacteristic));
}
BENCHMARK(BM_GradCamPerImage);

void BM_EfficientNetB2Forward(benchmark::State& state) {
    DermXConfig cfg;  // stock efficientnet-b2 at 260x260
    cfg.dropout = 0.0;
    DermXModel model(ModelKind::kDermX, cfg);
    ad::Tensor batch = random_batch(1, 260, 7);
    for (auto _ : state) {
        ad::NoGradGuard ng;
        benchmark::DoNotOptimize(model.forward(batch, false));
    }
}
BENCHMARK(BM_EfficientNetB2Forward)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace
