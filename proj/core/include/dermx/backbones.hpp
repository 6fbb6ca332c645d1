#ifndef DERMX_BACKBONES_HPP
#define DERMX_BACKBONES_HPP

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dermx/nn.hpp"

namespace dermx::nn {

class Backbone {
public:
    virtual ~Backbone() = default;
    virtual ad::Tensor forward(const ad::Tensor& x, bool train, Rng& rng) = 0;
    virtual void collect(std::vector<Parameter>& out) = 0;
    virtual void collect_buffers(std::vector<BufferRef>&) {}
    virtual int feature_channels() const = 0;
    virtual std::pair<int, int> feature_hw(int in_h, int in_w) const = 0;
    virtual const std::string& id() const = 0;
};

// Ids: "tiny-cnn" (two stride-2 conv+relu layers, 8 channels, test scale)
// and "efficientnet-b2" (MBConv+SE, swish, 1408-channel head; 9x9 features
// at 260x260). Unknown id throws.
std::unique_ptr<Backbone> make_backbone(const std::string& id, Rng& rng);

// feature geometry without paying for weight allocation
std::pair<int, int> backbone_feature_hw(const std::string& id, int in_h, int in_w);
int backbone_feature_channels(const std::string& id);

}  // namespace dermx::nn

#endif  // DERMX_BACKBONES_HPP
