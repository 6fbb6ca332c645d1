#ifndef DERMX_NN_HPP
#define DERMX_NN_HPP

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dermx/autodiff.hpp"

namespace dermx::nn {

struct Parameter {
    std::string name;
    ad::Tensor tensor;
};

class Rng {
public:
    explicit Rng(uint64_t seed = 0) : gen_(seed) {}
    void seed(uint64_t s) { gen_.seed(s); }
    double normal(double mean = 0.0, double stddev = 1.0) {
        return std::normal_distribution<double>(mean, stddev)(gen_);
    }
    double uniform(double lo = 0.0, double hi = 1.0) {
        return std::uniform_real_distribution<double>(lo, hi)(gen_);
    }
    uint64_t next() { return gen_(); }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

// TF-style SAME padding: output = ceil(input / stride).
struct SamePad {
    int64_t top, left, bottom, right;
};
SamePad same_pad(int64_t in, int64_t kernel, int64_t stride);

struct Conv2d {
    Conv2d() = default;
    Conv2d(const std::string& name, int in_ch, int out_ch, int kernel, int stride, bool bias, Rng& rng);

    ad::Tensor forward(const ad::Tensor& x) const;  // x: (N,C,H,W)
    void collect(std::vector<Parameter>& out);
    std::pair<int64_t, int64_t> out_hw(int64_t h, int64_t w) const;

    std::string name;
    int in_ch = 0, out_ch = 0, kernel = 0, stride = 1;
    ad::Tensor weight;  // (in_ch*k*k, out_ch)
    ad::Tensor bias;    // (out_ch), undefined when folded into BN
};

struct DepthwiseConv2d {
    DepthwiseConv2d() = default;
    DepthwiseConv2d(const std::string& name, int channels, int kernel, int stride, Rng& rng);

    ad::Tensor forward(const ad::Tensor& x) const;
    void collect(std::vector<Parameter>& out);

    std::string name;
    int channels = 0, kernel = 0, stride = 1;
    ad::Tensor weight;  // (channels*k*k) flat
};

struct Linear {
    Linear() = default;
    Linear(const std::string& name, int in, int out, Rng& rng);

    ad::Tensor forward(const ad::Tensor& x) const;  // x: (N,in)
    void collect(std::vector<Parameter>& out);

    std::string name;
    int in = 0, out = 0;
    ad::Tensor weight;  // (in,out)
    ad::Tensor bias;    // (out)
};

// named views over non-trained state (batch-norm running stats)
using BufferRef = std::pair<std::string, std::vector<double>*>;

struct BatchNorm2d {
    BatchNorm2d() = default;
    BatchNorm2d(const std::string& name, int channels, double momentum = 0.01, double eps = 1e-3);

    ad::Tensor forward(const ad::Tensor& x, bool train);
    void collect(std::vector<Parameter>& out);
    void collect_buffers(std::vector<BufferRef>& out);

    std::string name;
    int channels = 0;
    double momentum = 0.01, eps = 1e-3;
    ad::Tensor gamma, beta;
    std::vector<double> running_mean, running_var;  // buffers, not parameters
};

struct Dropout {
    double p = 0.0;
    ad::Tensor forward(const ad::Tensor& x, bool train, Rng& rng) const;
};

// Images enter the graph as (N,3,H,W) doubles in [0,1].

}  // namespace dermx::nn

#endif  // DERMX_NN_HPP
