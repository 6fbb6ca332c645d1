#include "dermx/backbones.hpp"

#include <cmath>

#include "dermx/errors.hpp"

namespace dermx::nn {

using ad::Tensor;

namespace {

class TinyCnn final : public Backbone {
public:
    explicit TinyCnn(Rng& rng)
        : conv1_("backbone.conv1", 3, 8, 3, 2, true, rng),
          conv2_("backbone.conv2", 8, 8, 3, 2, true, rng) {}

    Tensor forward(const Tensor& x, bool, Rng&) override {
        return ad::relu(conv2_.forward(ad::relu(conv1_.forward(x))));
    }

    void collect(std::vector<Parameter>& out) override {
        conv1_.collect(out);
        conv2_.collect(out);
    }

    int feature_channels() const override { return 8; }

    std::pair<int, int> feature_hw(int h, int w) const override {
        auto half = [](int v) { return (v + 1) / 2; };
        return {half(half(h)), half(half(w))};
    }

    const std::string& id() const override {
        static const std::string kId = "tiny-cnn";
        return kId;
    }

private:
    Conv2d conv1_, conv2_;
};

// Squeeze-and-excitation over pooled channel descriptors.
struct SqueezeExcite {
    SqueezeExcite() = default;
    SqueezeExcite(const std::string& name, int channels, int se_channels, Rng& rng)
        : reduce(name + ".se.reduce", channels, se_channels, rng),
          expand(name + ".se.expand", se_channels, channels, rng) {}

    Tensor forward(const Tensor& x) const {
        const auto& s = x.shape();
        const int64_t n = s[0], c = s[1], hw = s[2] * s[3];
        Tensor pooled = ad::mul_scalar(
            ad::scatter_add(x, ad::row_of_map(n * c, hw), {n * c}), 1.0 / static_cast<double>(hw));
        Tensor v = ad::reshape(pooled, {n, c});
        Tensor gate = ad::sigmoid(expand.forward(ad::silu(reduce.forward(v))));
        Tensor tiled = ad::gather(ad::reshape(gate, {n * c}), ad::row_of_map(n * c, hw), {n * c, hw});
        return ad::mul(x, ad::reshape(tiled, s));
    }

    void collect(std::vector<Parameter>& out) {
        reduce.collect(out);
        expand.collect(out);
    }

    Linear reduce, expand;
};

struct MBConv {
    MBConv() = default;
    MBConv(const std::string& name, int in_ch, int out_ch, int kernel, int stride, int expand_ratio,
           Rng& rng)
        : in_channels(in_ch), out_channels(out_ch), stride_(stride), expand_ratio_(expand_ratio) {
        const int exp_ch = in_ch * expand_ratio;
        if (expand_ratio > 1) {
            expand_conv = Conv2d(name + ".expand", in_ch, exp_ch, 1, 1, false, rng);
            expand_bn = BatchNorm2d(name + ".expand_bn", exp_ch);
        }
        dw = DepthwiseConv2d(name + ".dw", exp_ch, kernel, stride, rng);
        dw_bn = BatchNorm2d(name + ".dw_bn", exp_ch);
        const int se_ch = std::max(1, in_ch / 4);
        se = SqueezeExcite(name, exp_ch, se_ch, rng);
        project = Conv2d(name + ".project", exp_ch, out_ch, 1, 1, false, rng);
        project_bn = BatchNorm2d(name + ".project_bn", out_ch);
    }

    Tensor forward(const Tensor& x, bool train) {
        Tensor h = x;
        if (expand_ratio_ > 1) h = ad::silu(expand_bn.forward(expand_conv.forward(h), train));
        h = ad::silu(dw_bn.forward(dw.forward(h), train));
        h = se.forward(h);
        h = project_bn.forward(project.forward(h), train);
        if (stride_ == 1 && in_channels == out_channels) h = ad::add(h, x);
        return h;
    }

    void collect(std::vector<Parameter>& out) {
        if (expand_ratio_ > 1) {
            expand_conv.collect(out);
            expand_bn.collect(out);
        }
        dw.collect(out);
        dw_bn.collect(out);
        se.collect(out);
        project.collect(out);
        project_bn.collect(out);
    }

    void collect_buffers(std::vector<BufferRef>& out) {
        if (expand_ratio_ > 1) expand_bn.collect_buffers(out);
        dw_bn.collect_buffers(out);
        project_bn.collect_buffers(out);
    }

    int in_channels = 0, out_channels = 0;
    int stride_ = 1, expand_ratio_ = 1;
    Conv2d expand_conv;
    BatchNorm2d expand_bn;
    DepthwiseConv2d dw;
    BatchNorm2d dw_bn;
    SqueezeExcite se;
    Conv2d project;
    BatchNorm2d project_bn;
};

// B0 scaled by width 1.1 / depth 1.2 with channels rounded to multiples of 8.
class EfficientNetB2 final : public Backbone {
public:
    explicit EfficientNetB2(Rng& rng)
        : stem_("backbone.stem", 3, 32, 3, 2, false, rng), stem_bn_("backbone.stem_bn", 32) {
        struct StageSpec {
            int out_ch, kernel, stride, expand, repeats;
        };
        const StageSpec stages[] = {
            {16, 3, 1, 1, 2}, {24, 3, 2, 6, 3},  {48, 5, 2, 6, 3}, {88, 3, 2, 6, 4},
            {120, 5, 1, 6, 4}, {208, 5, 2, 6, 5}, {352, 3, 1, 6, 2},
        };
        int in_ch = 32;
        int stage_idx = 0;
        for (const auto& spec : stages) {
            ++stage_idx;
            for (int r = 0; r < spec.repeats; ++r) {
                const std::string name = "backbone.stage" + std::to_string(stage_idx) + ".block" +
                                         std::to_string(r);
                blocks_.emplace_back(name, in_ch, spec.out_ch, spec.kernel,
                                     r == 0 ? spec.stride : 1, spec.expand, rng);
                in_ch = spec.out_ch;
            }
        }
        head_ = Conv2d("backbone.head", in_ch, 1408, 1, 1, false, rng);
        head_bn_ = BatchNorm2d("backbone.head_bn", 1408);
    }

    Tensor forward(const Tensor& x, bool train, Rng&) override {
        Tensor h = ad::silu(stem_bn_.forward(stem_.forward(x), train));
        for (auto& block : blocks_) h = block.forward(h, train);
        return ad::silu(head_bn_.forward(head_.forward(h), train));
    }

    void collect(std::vector<Parameter>& out) override {
        stem_.collect(out);
        stem_bn_.collect(out);
        for (auto& block : blocks_) block.collect(out);
        head_.collect(out);
        head_bn_.collect(out);
    }

    void collect_buffers(std::vector<BufferRef>& out) override {
        stem_bn_.collect_buffers(out);
        for (auto& block : blocks_) block.collect_buffers(out);
        head_bn_.collect_buffers(out);
    }

    int feature_channels() const override { return 1408; }

    std::pair<int, int> feature_hw(int h, int w) const override {
        // five stride-2 reductions with SAME padding
        auto half = [](int v) { return (v + 1) / 2; };
        for (int i = 0; i < 5; ++i) {
            h = half(h);
            w = half(w);
        }
        return {h, w};
    }

    const std::string& id() const override {
        static const std::string kId = "efficientnet-b2";
        return kId;
    }

private:
    Conv2d stem_;
    BatchNorm2d stem_bn_;
    std::vector<MBConv> blocks_;
    Conv2d head_;
    BatchNorm2d head_bn_;
};

}  // namespace

std::unique_ptr<Backbone> make_backbone(const std::string& id, Rng& rng) {
    if (id == "tiny-cnn") return std::make_unique<TinyCnn>(rng);
    if (id == "efficientnet-b2") return std::make_unique<EfficientNetB2>(rng);
    throw SchemaError("unknown backbone '" + id + "'");
}

std::pair<int, int> backbone_feature_hw(const std::string& id, int in_h, int in_w) {
    auto half = [](int v) { return (v + 1) / 2; };
    if (id == "tiny-cnn") return {half(half(in_h)), half(half(in_w))};
    if (id == "efficientnet-b2") {
        for (int i = 0; i < 5; ++i) {
            in_h = half(in_h);
            in_w = half(in_w);
        }
        return {in_h, in_w};
    }
    throw SchemaError("unknown backbone '" + id + "'");
}

int backbone_feature_channels(const std::string& id) {
    if (id == "tiny-cnn") return 8;
    if (id == "efficientnet-b2") return 1408;
    throw SchemaError("unknown backbone '" + id + "'");
}

}  // namespace dermx::nn
