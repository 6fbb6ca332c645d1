#include <doctest.h>

#include <cmath>
#include <random>

#include "dermx/fusion.hpp"
#include "dermx/model.hpp"
#include "fixtures.hpp"

using namespace dermx;
using ad::Tensor;

namespace {

DermXConfig tiny_config(int d = 3, int c = 3, int hw = 32) {
    DermXConfig cfg;
    cfg.backbone = "tiny-cnn";
    cfg.input_h = cfg.input_w = hw;
    cfg.num_diseases = d;
    cfg.num_characteristics = c;
    cfg.dense_width = 16;
    cfg.dropout = 0.0;
    cfg.lambda_a = 10.0;
    return cfg;
}

Tensor random_images(int n, int hw, uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> v(static_cast<size_t>(n) * 3 * hw * hw);
    for (auto& x : v) x = u(gen);
    return Tensor::constant({n, 3, hw, hw}, std::move(v));
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("diagnosis head input width is dense_width + C") {
    DermXConfig cfg;
    cfg.backbone = "tiny-cnn";
    cfg.input_h = cfg.input_w = 32;
    REQUIRE(cfg.dense_width == 64);
    REQUIRE(cfg.num_characteristics == 10);
    DermXModel model(ModelKind::kDermX, cfg);
    for (const auto& p : model.parameters())
        if (p.name == "diag.out.weight") CHECK(p.tensor.shape()[0] == 74);

    DermXModel dx(ModelKind::kDxOnly, cfg);
    for (const auto& p : dx.parameters())
        if (p.name == "diag.out.weight") CHECK(p.tensor.shape()[0] == 64);
}

TEST_CASE("forward: rows sum to 1 and characteristic probs stay in (0,1)") {
    DermXModel model(ModelKind::kDermX, tiny_config());
    ModelOutputs out = model.forward(random_images(2, 32, 3), false);
    REQUIRE(out.diagnosis_probs.shape() == ad::Shape{2, 3});
    for (int r = 0; r < 2; ++r) {
        double sum = 0;
        for (int c = 0; c < 3; ++c) sum += out.diagnosis_probs.data()[r * 3 + c];
        CHECK(std::abs(sum - 1.0) < 1e-5);
    }
    for (double v : out.characteristic_probs.data()) CHECK((v > 0.0 && v < 1.0));
}

TEST_CASE("model kinds share backbone parameter counts; heads differ") {
    auto count = [](DermXModel& m, bool backbone_only) {
        int64_t n = 0;
        for (const auto& p : m.parameters())
            if (!backbone_only || p.name.rfind("backbone.", 0) == 0) n += p.tensor.numel();
        return n;
    };
    DermXModel dx(ModelKind::kDxOnly, tiny_config());
    DermXModel dermx(ModelKind::kDermX, tiny_config());
    DermXModel plus(ModelKind::kDermXPlus, tiny_config());
    CHECK(count(dx, true) == count(dermx, true));
    CHECK(count(dermx, true) == count(plus, true));
    CHECK(count(dermx, false) == count(plus, false));
    CHECK(count(dx, false) < count(dermx, false));
}

TEST_CASE("characteristic-logit pathway into the diagnosis head is live") {
    DermXModel model(ModelKind::kDermX, tiny_config());
    Tensor images = random_images(2, 32, 5);
    Tensor features = model.features_only(images, false);
    ModelOutputs normal = model.heads_from_features(features, false);
    Tensor zeros = Tensor::zeros(normal.characteristic_logits.shape());
    ModelOutputs cut = model.heads_from_features(features, false, &zeros);
    double diff = 0;
    for (size_t i = 0; i < normal.diagnosis_logits.data().size(); ++i)
        diff += std::abs(normal.diagnosis_logits.data()[i] - cut.diagnosis_logits.data()[i]);
    CHECK(diff > 1e-6);
}

TEST_CASE("losses: frozen values") {
    // one-hot match -> L_D ~ 0
    Tensor match = Tensor::constant({2, 3}, {1, 0, 0, 0, 1, 0});
    CHECK(loss_diagnosis(match, match).item() <= 1e-6);

    // z_hat = 0.5 everywhere -> L_C = ln 2
    Tensor half = Tensor::full({2, 4}, 0.5);
    Tensor z = Tensor::constant({2, 4}, {1, 0, 1, 0, 0, 1, 0, 1});
    CHECK(loss_characteristics(half, z).item() == doctest::Approx(std::log(2.0)).epsilon(1e-9));

    // lambda_c = 0 -> combined equals L_D exactly
    DermXConfig cfg = tiny_config();
    cfg.lambda_d = 1.0;
    cfg.lambda_c = 0.0;
    cfg.lambda_a = 0.0;
    Tensor ld = Tensor::scalar(0.37);
    Tensor lc = Tensor::scalar(9.99);
    CHECK(combine_losses(ld, lc, {}, cfg).item() == doctest::Approx(0.37));
}

TEST_CASE("attention dice loss: identical, disjoint and hand-computed 1x2 cases") {
    Tensor ones_z = Tensor::full({1}, 1.0);

    // identical binary maps: 1 - 2*sum(a^2)/(2*sum(a)+eps) vanishes since a^2 = a
    Tensor m = Tensor::constant({1, 4}, {1.0, 1.0, 0.0, 1.0});
    CHECK(attention_dice_terms(m, m, ones_z).data()[0] <= 1e-6);

    Tensor a_ones = Tensor::full({1, 4}, 1.0);
    Tensor m_zero = Tensor::zeros({1, 4});
    CHECK(attention_dice_terms(a_ones, m_zero, ones_z).data()[0] ==
          doctest::Approx(1.0).epsilon(1e-6));

    // A=[[1,0]], M=[[0.5,0.5]]: 1 - 2*0.5/(1+1+eps) ~ 0.5
    Tensor a12 = Tensor::constant({1, 2}, {1.0, 0.0});
    Tensor m12 = Tensor::constant({1, 2}, {0.5, 0.5});
    CHECK(attention_dice_terms(a12, m12, ones_z).data()[0] ==
          doctest::Approx(0.5).epsilon(1e-6));

    // z=0 pairs contribute exactly zero
    Tensor zero_z = Tensor::zeros({1});
    CHECK(attention_dice_terms(a12, m12, zero_z).data()[0] == 0.0);

    // loss_attention averages over N*C
    Tensor a2 = Tensor::constant({2, 2}, {1.0, 0.0, 1.0, 0.0});
    Tensor m2 = Tensor::constant({2, 2}, {0.5, 0.5, 0.5, 0.5});
    Tensor z2 = Tensor::constant({2}, {1.0, 0.0});
    Tensor la = loss_attention({a2}, {m2}, {z2});
    CHECK(la.item() == doctest::Approx(0.25).epsilon(1e-6));  // 0.5 / (N=2 * C=1)
    CHECK_THROWS_AS(attention_dice_terms(a12, m2, ones_z), SchemaError);

    // per-pair terms stay in [0, 1] and the total is non-negative on random maps
    std::mt19937_64 gen(606);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> av(8), mv(8), zv = {1.0, u(gen) < 0.5 ? 1.0 : 0.0};
        for (auto& v : av) v = u(gen);
        for (auto& v : mv) v = u(gen);
        Tensor a = Tensor::constant({2, 4}, av);
        Tensor m = Tensor::constant({2, 4}, mv);
        Tensor z = Tensor::constant({2}, zv);
        Tensor terms = attention_dice_terms(a, m, z);
        for (double t : terms.data()) CHECK((t >= 0.0 && t <= 1.0 + 1e-9));
        CHECK(loss_attention({a}, {m}, {z}).item() >= 0.0);
    }
}

TEST_CASE("grad_cam: constant features give all-zero maps, values stay in [0,1]") {
    DermXModel model(ModelKind::kDermX, tiny_config());
    const auto [fh, fw] = model.feature_hw();
    const int k = model.feature_channels();

    // degenerate: constant feature maps -> min==max -> zeros
    Tensor flat_features = Tensor::param({1, k, fh, fw},
                                         std::vector<double>(static_cast<size_t>(k) * fh * fw, 0.7));
    ModelOutputs out = model.heads_from_features(flat_features, false);
    auto col = std::make_shared<std::vector<int64_t>>(1, 0);
    Tensor logit = ad::gather(out.characteristic_logits, col, {1});
    Tensor maps = grad_cam_maps(flat_features, logit, false);
    bool all_zero = true;
    for (double v : maps.data()) all_zero = all_zero && v == 0.0;
    // weights are uniform over a constant map; raw map constant -> normalized to zero
    CHECK(all_zero);

    // generic image: map in [0,1] with exact 0 and 1 attained
    AttentionMap am = grad_cam(model, Image(32, 32, 77), 1, GradCamHead::kDiagnosis);
    CHECK(am.values.height() == fh);
    CHECK(am.values.width() == fw);
    double mx = 0, mn = 1;
    for (double v : am.values.values()) {
        CHECK((v >= 0.0 && v <= 1.0));
        mx = std::max(mx, v);
        mn = std::min(mn, v);
    }
    CHECK(mx == doctest::Approx(1.0));
    CHECK(mn == doctest::Approx(0.0));
}

TEST_CASE("grad_cam of a fixed class is invariant to a constant logit shift") {
    DermXConfig cfg = tiny_config();
    DermXModel model(ModelKind::kDermX, cfg);
    Image img(32, 32, 0);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            img.at(y, x, 0) = static_cast<uint8_t>((x * 8) % 256);
            img.at(y, x, 1) = static_cast<uint8_t>((y * 8) % 256);
        }
    AttentionMap base = grad_cam(model, img, 0, GradCamHead::kDiagnosis);

    // shifting every diagnosis logit by a constant: bump all output biases
    for (auto& p : model.parameters())
        if (p.name == "diag.out.bias")
            for (auto& b : p.tensor.leaf_data()) b += 3.21;
    AttentionMap shifted = grad_cam(model, img, 0, GradCamHead::kDiagnosis);
    for (size_t i = 0; i < base.values.size(); ++i)
        CHECK(base.values[i] == doctest::Approx(shifted.values[i]).epsilon(1e-9));
}

TEST_CASE("randomizing weights changes grad_cam maps") {
    DermXConfig cfg = tiny_config();
    DermXModel model(ModelKind::kDermX, cfg);
    Image img(32, 32, 0);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) img.at(y, x, 0) = static_cast<uint8_t>((x * y) % 256);
    AttentionMap before = grad_cam(model, img, 0, GradCamHead::kCharacteristic);

    std::mt19937_64 gen(987);
    std::normal_distribution<double> nd(0.0, 0.5);
    for (auto& p : model.parameters())
        for (auto& v : p.tensor.leaf_data()) v = nd(gen);
    AttentionMap after = grad_cam(model, img, 0, GradCamHead::kCharacteristic);

    double mad = 0;
    for (size_t i = 0; i < before.values.size(); ++i)
        mad += std::abs(before.values[i] - after.values[i]);
    mad /= before.values.size();
    CHECK(mad > 0.0);
}

TEST_CASE("combined-loss gradients match finite differences on tiny-cnn (incl. lambda_a)") {
    DermXConfig cfg = tiny_config(3, 2, 16);
    cfg.lambda_a = 10.0;
    DermXModel model(ModelKind::kDermXPlus, cfg);
    const auto [fh, fw] = model.feature_hw();
    const int64_t hw = static_cast<int64_t>(fh) * fw;

    auto ds = fixtures::make_blob_dataset(4, 16, 99);
    Tensor images = images_to_tensor(ds.images);
    Tensor y = [&]() {
        std::vector<double> v(4 * 3, 0.0);
        for (int i = 0; i < 4; ++i) v[i * 3 + ds.disease[i]] = 1.0;
        return Tensor::constant({4, 3}, std::move(v));
    }();
    Tensor z = [&]() {
        std::vector<double> v(4 * 2, 0.0);
        for (int i = 0; i < 4; ++i)
            for (int c = 0; c < 2; ++c) v[i * 2 + c] = ds.z[i][c];
        return Tensor::constant({4, 2}, std::move(v));
    }();
    std::vector<Tensor> targets, zmask;
    for (int c = 0; c < 2; ++c) {
        std::vector<double> m(4 * static_cast<size_t>(hw), 0.0);
        std::vector<double> zm(4, 0.0);
        for (int i = 0; i < 4; ++i) {
            if (!ds.z[i][c]) continue;
            zm[i] = 1.0;
            FuzzyMask full{ds.masks[i][c], "", ""};
            Grid small = downscale_fuzzy(full, fh, fw).values;
            std::copy(small.values().begin(), small.values().end(), m.begin() + i * hw);
        }
        targets.push_back(Tensor::constant({4, hw}, std::move(m)));
        zmask.push_back(Tensor::constant({4}, std::move(zm)));
    }

    auto loss_value = [&]() {
        ModelOutputs out = model.forward(images, /*train=*/false);
        Tensor l_d = loss_diagnosis(out.diagnosis_probs, y);
        Tensor l_c = loss_characteristics(out.characteristic_probs, z);
        std::vector<Tensor> maps;
        for (int c = 0; c < 2; ++c) {
            const int64_t rows = out.characteristic_logits.shape()[0];
            auto idx = std::make_shared<std::vector<int64_t>>();
            for (int64_t r = 0; r < rows; ++r) idx->push_back(r * 2 + c);
            Tensor logits_c = ad::gather(out.characteristic_logits, idx, {rows});
            maps.push_back(grad_cam_maps(out.features, logits_c, /*create_graph=*/true));
        }
        Tensor l_a = loss_attention(maps, targets, zmask);
        return combine_losses(l_d, l_c, l_a, cfg);
    };

    Tensor total = loss_value();
    std::vector<ad::Tensor> params;
    for (auto& p : model.parameters()) params.push_back(p.tensor);
    auto analytic = ad::grad(total, params, false);

    // sample parameters across all tensors and compare against central FD
    std::mt19937_64 gen(2025);
    int checked = 0, ok = 0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& data = params[pi].leaf_data();
        std::uniform_int_distribution<size_t> pick(0, data.size() - 1);
        const int samples = std::min<size_t>(6, data.size());
        for (int s = 0; s < samples; ++s) {
            const size_t j = pick(gen);
            const double orig = data[j];
            const double h = 1e-5 * std::max(1.0, std::abs(orig));
            data[j] = orig + h;
            const double fp = loss_value().item();
            data[j] = orig - h;
            const double fm = loss_value().item();
            data[j] = orig;
            const double fd = (fp - fm) / (2 * h);
            const double an = analytic[pi].data()[j];
            const double rel = std::abs(fd - an) / std::max({1e-8, std::abs(fd), std::abs(an)});
            ++checked;
            ok += rel <= 1e-3;
        }
    }
    // selector/ReLU kinks may spoil isolated samples
    CHECK(static_cast<double>(ok) / checked >= 0.99);
}

TEST_CASE("inference grad_cam equals the training-path maps on the same image") {
    auto ds = fixtures::make_blob_dataset(1, 32, 61);
    DermXConfig cfg = tiny_config();
    DermXModel model(ModelKind::kDermX, cfg);

    // training path: full graph from pixels to logits
    Tensor images = images_to_tensor(ds.images);
    ModelOutputs out = model.forward(images, /*train=*/false);
    auto idx = std::make_shared<std::vector<int64_t>>(1, 1);  // characteristic 1 of image 0
    Tensor logit = ad::gather(out.characteristic_logits, idx, {1});
    Tensor training_maps = grad_cam_maps(out.features, logit, /*create_graph=*/true);

    // inference path: backbone under no-grad, head rebuilt on a feature leaf
    AttentionMap inference = grad_cam(model, ds.images[0], 1, GradCamHead::kCharacteristic);
    REQUIRE(static_cast<size_t>(training_maps.numel()) == inference.values.size());
    for (size_t p = 0; p < inference.values.size(); ++p)
        CHECK(training_maps.data()[p] == doctest::Approx(inference.values[p]).epsilon(1e-12));
}

TEST_CASE("the second-order fallback flag changes attention-loss gradients") {
    auto ds = fixtures::make_blob_dataset(4, 16, 71);
    const auto run = [&](bool full_second_order) {
        DermXConfig cfg = tiny_config(3, 2, 16);
        cfg.lambda_d = 0.0;
        cfg.lambda_c = 0.0;
        cfg.lambda_a = 1.0;
        cfg.attention_full_second_order = full_second_order;
        DermXModel model(ModelKind::kDermXPlus, cfg);
        const auto [fh, fw] = model.feature_hw();
        const int64_t hw = static_cast<int64_t>(fh) * fw;

        ModelOutputs out = model.forward(images_to_tensor(ds.images), false);
        std::vector<Tensor> maps, targets, masks;
        for (int c = 0; c < 2; ++c) {
            auto idx = std::make_shared<std::vector<int64_t>>();
            for (int64_t r = 0; r < 4; ++r) idx->push_back(r * 2 + c);
            Tensor logits_c = ad::gather(out.characteristic_logits, idx, {4});
            maps.push_back(grad_cam_maps(out.features, logits_c, true, full_second_order));
            std::vector<double> m(4 * static_cast<size_t>(hw), 0.0), zm(4, 0.0);
            for (int i = 0; i < 4; ++i) {
                if (!ds.z[i][c]) continue;
                zm[i] = 1.0;
                Grid small = downscale_fuzzy({ds.masks[i][c], "", ""}, fh, fw).values;
                std::copy(small.values().begin(), small.values().end(), m.begin() + i * hw);
            }
            targets.push_back(Tensor::constant({4, hw}, std::move(m)));
            masks.push_back(Tensor::constant({4}, std::move(zm)));
        }
        Tensor loss = loss_attention(maps, targets, masks);
        std::vector<Tensor> params;
        for (auto& p : model.parameters()) params.push_back(p.tensor);
        auto grads = ad::grad(loss, params, false);
        double norm = 0.0;
        for (const auto& g : grads)
            for (double v : g.data()) norm += v * v;
        return std::pair<double, double>{loss.item(), norm};
    };
    auto [full_loss, full_norm] = run(true);
    auto [fallback_loss, fallback_norm] = run(false);
    // same forward values (identical init seed), different gradient fields
    CHECK(full_loss == doctest::Approx(fallback_loss).epsilon(1e-12));
    CHECK(full_norm != doctest::Approx(fallback_norm).epsilon(1e-9));
    CHECK(fallback_norm > 0.0);  // first-order path still trains
}

TEST_CASE("efficientnet-b2 shape contract: 9x9 features and grad-cam at 260x260") {
    DermXConfig cfg;
    cfg.backbone = "efficientnet-b2";
    cfg.input_h = cfg.input_w = 260;
    cfg.dropout = 0.0;
    DermXModel model(ModelKind::kDermX, cfg);
    const auto [fh, fw] = model.feature_hw();
    CHECK(fh == 9);
    CHECK(fw == 9);

    Image img(260, 260, 0);
    for (int y = 0; y < 260; ++y)
        for (int x = 0; x < 260; ++x) img.at(y, x, 1) = static_cast<uint8_t>((x + y) % 256);
    AttentionMap am = grad_cam(model, img, 2, GradCamHead::kDiagnosis);
    CHECK(am.values.height() == 9);
    CHECK(am.values.width() == 9);
    for (double v : am.values.values()) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_SUITE_END();
