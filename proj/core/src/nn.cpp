#include "dermx/nn.hpp"

#include <cmath>

#include "dermx/errors.hpp"

namespace dermx::nn {

using ad::IndexMap;
using ad::Shape;
using ad::Tensor;

SamePad same_pad(int64_t in, int64_t kernel, int64_t stride) {
    const int64_t out = (in + stride - 1) / stride;
    const int64_t total = std::max<int64_t>(0, (out - 1) * stride + kernel - in);
    SamePad p;
    p.top = total / 2;
    p.bottom = total - p.top;
    p.left = p.top;
    p.right = p.bottom;
    return p;
}

namespace {

std::vector<double> he_normal(size_t n, double fan_in, Rng& rng) {
    const double stddev = std::sqrt(2.0 / fan_in);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.normal(0.0, stddev);
    return v;
}

std::vector<double> uniform_fan(size_t n, double fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(fan_in);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-bound, bound);
    return v;
}

}  // namespace

Conv2d::Conv2d(const std::string& name_, int in_ch_, int out_ch_, int kernel_, int stride_,
               bool use_bias, Rng& rng)
    : name(name_), in_ch(in_ch_), out_ch(out_ch_), kernel(kernel_), stride(stride_) {
    const size_t fan_in = static_cast<size_t>(in_ch) * kernel * kernel;
    weight = Tensor::param({static_cast<int64_t>(fan_in), out_ch},
                           he_normal(fan_in * out_ch, static_cast<double>(fan_in), rng));
    if (use_bias)
        bias = Tensor::param({out_ch}, uniform_fan(static_cast<size_t>(out_ch),
                                                   static_cast<double>(fan_in), rng));
}

void Conv2d::collect(std::vector<Parameter>& out) {
    out.push_back({name + ".weight", weight});
    if (bias.defined()) out.push_back({name + ".bias", bias});
}

std::pair<int64_t, int64_t> Conv2d::out_hw(int64_t h, int64_t w) const {
    return {(h + stride - 1) / stride, (w + stride - 1) / stride};
}

ad::Tensor Conv2d::forward(const Tensor& x) const {
    const Shape& s = x.shape();
    if (s.size() != 4 || s[1] != in_ch) throw SchemaError("Conv2d " + name + ": bad input shape");
    const int64_t n = s[0], h = s[2], w = s[3];
    const SamePad py = same_pad(h, kernel, stride);
    const SamePad px = same_pad(w, kernel, stride);
    ad::ConvGeometry g{n, in_ch, h, w, kernel, kernel, stride, py.top, px.left, py.bottom, px.right};
    const int64_t oh = g.out_h(), ow = g.out_w();
    Tensor patches = ad::gather(x, ad::im2col_map(g),
                                {n * oh * ow, static_cast<int64_t>(in_ch) * kernel * kernel});
    Tensor out = ad::matmul(patches, weight);  // (n*oh*ow, out_ch)
    if (bias.defined()) out = ad::add(out, ad::broadcast_rows(bias, n * oh * ow));
    return ad::gather(out, ad::nhwc_to_nchw_map(n, oh * ow, out_ch), {n, out_ch, oh, ow});
}

DepthwiseConv2d::DepthwiseConv2d(const std::string& name_, int channels_, int kernel_, int stride_,
                                 Rng& rng)
    : name(name_), channels(channels_), kernel(kernel_), stride(stride_) {
    const size_t kk = static_cast<size_t>(kernel) * kernel;
    weight = Tensor::param({static_cast<int64_t>(channels) * static_cast<int64_t>(kk)},
                           he_normal(static_cast<size_t>(channels) * kk, static_cast<double>(kk), rng));
}

void DepthwiseConv2d::collect(std::vector<Parameter>& out) {
    out.push_back({name + ".weight", weight});
}

ad::Tensor DepthwiseConv2d::forward(const Tensor& x) const {
    const Shape& s = x.shape();
    if (s.size() != 4 || s[1] != channels)
        throw SchemaError("DepthwiseConv2d " + name + ": bad input shape");
    const int64_t n = s[0], h = s[2], w = s[3];
    const SamePad py = same_pad(h, kernel, stride);
    const SamePad px = same_pad(w, kernel, stride);
    ad::ConvGeometry g{n, channels, h, w, kernel, kernel, stride, py.top, px.left, py.bottom, px.right};
    const int64_t oh = g.out_h(), ow = g.out_w();
    const int64_t kk = static_cast<int64_t>(kernel) * kernel;
    const int64_t rows = n * channels * oh * ow;
    Tensor patches = ad::gather(x, ad::im2col_depthwise_map(g), {rows, kk});
    Tensor tiled = ad::gather(weight, ad::dw_weight_tile_map(n, channels, oh * ow, kk), {rows, kk});
    Tensor prod = ad::mul(patches, tiled);
    Tensor summed = ad::scatter_add(prod, ad::row_of_map(rows, kk), {rows});
    return ad::reshape(summed, {n, channels, oh, ow});
}

Linear::Linear(const std::string& name_, int in_, int out_, Rng& rng)
    : name(name_), in(in_), out(out_) {
    weight = Tensor::param({in, out}, uniform_fan(static_cast<size_t>(in) * out, in, rng));
    bias = Tensor::param({out}, uniform_fan(static_cast<size_t>(out), in, rng));
}

void Linear::collect(std::vector<Parameter>& params) {
    params.push_back({name + ".weight", weight});
    params.push_back({name + ".bias", bias});
}

ad::Tensor Linear::forward(const Tensor& x) const {
    if (x.shape().size() != 2 || x.shape()[1] != in)
        throw SchemaError("Linear " + name + ": bad input shape " + ad::shape_str(x.shape()));
    return ad::add(ad::matmul(x, weight), ad::broadcast_rows(bias, x.shape()[0]));
}

BatchNorm2d::BatchNorm2d(const std::string& name_, int channels_, double momentum_, double eps_)
    : name(name_), channels(channels_), momentum(momentum_), eps(eps_) {
    gamma = Tensor::param({channels}, std::vector<double>(channels, 1.0));
    beta = Tensor::param({channels}, std::vector<double>(channels, 0.0));
    running_mean.assign(channels, 0.0);
    running_var.assign(channels, 1.0);
}

void BatchNorm2d::collect(std::vector<Parameter>& out) {
    out.push_back({name + ".gamma", gamma});
    out.push_back({name + ".beta", beta});
}

void BatchNorm2d::collect_buffers(std::vector<BufferRef>& out) {
    out.push_back({name + ".running_mean", &running_mean});
    out.push_back({name + ".running_var", &running_var});
}

ad::Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
    const Shape& s = x.shape();
    if (s.size() != 4 || s[1] != channels) throw SchemaError("BatchNorm2d " + name + ": bad input shape");
    const int64_t n = s[0], hw = s[2] * s[3];
    const IndexMap chan = ad::channel_of_nchw_map(n, channels, hw);
    const double count = static_cast<double>(n * hw);

    if (train) {
        Tensor mean = ad::mul_scalar(ad::scatter_add(x, chan, {channels}), 1.0 / count);
        Tensor centered = ad::sub(x, ad::gather(mean, chan, s));
        Tensor var = ad::mul_scalar(ad::scatter_add(ad::mul(centered, centered), chan, {channels}),
                                    1.0 / count);
        for (int c = 0; c < channels; ++c) {
            running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mean.data()[c];
            running_var[c] = (1.0 - momentum) * running_var[c] + momentum * var.data()[c];
        }
        Tensor inv = ad::reciprocal(ad::sqrt(ad::add_scalar(var, eps)));
        Tensor xhat = ad::mul(centered, ad::gather(inv, chan, s));
        return ad::add(ad::mul(xhat, ad::gather(gamma, chan, s)), ad::gather(beta, chan, s));
    }

    std::vector<double> scale(channels), shift(channels);
    for (int c = 0; c < channels; ++c) scale[c] = 1.0 / std::sqrt(running_var[c] + eps);
    Tensor inv = Tensor::constant({channels}, std::move(scale));
    Tensor rm = Tensor::constant({channels}, running_mean);
    Tensor centered = ad::sub(x, ad::gather(rm, chan, s));
    Tensor xhat = ad::mul(centered, ad::gather(inv, chan, s));
    return ad::add(ad::mul(xhat, ad::gather(gamma, chan, s)), ad::gather(beta, chan, s));
}

ad::Tensor Dropout::forward(const Tensor& x, bool train, Rng& rng) const {
    if (!train || p <= 0.0) return x;
    std::vector<double> mask(static_cast<size_t>(x.numel()));
    const double keep = 1.0 - p;
    for (auto& m : mask) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
    return ad::mul(x, Tensor::constant(x.shape(), std::move(mask)));
}

}  // namespace dermx::nn
