#ifndef DERMX_IMAGE_HPP
#define DERMX_IMAGE_HPP

#include <cstdint>
#include <vector>

#include "dermx/errors.hpp"

namespace dermx {

// 8-bit RGB image, row-major, interleaved channels.
class Image {
public:
    Image() = default;
    Image(int h, int w, uint8_t fill = 0) : h_(h), w_(w), v_(static_cast<size_t>(h) * w * 3, fill) {
        if (h < 1 || w < 1) throw SchemaError("image dimensions must be >= 1");
    }
    Image(int h, int w, std::vector<uint8_t> rgb) : h_(h), w_(w), v_(std::move(rgb)) {
        if (v_.size() != static_cast<size_t>(h) * w * 3) throw SchemaError("image byte count does not match dimensions");
    }

    int height() const { return h_; }
    int width() const { return w_; }

    uint8_t& at(int y, int x, int c) { return v_[(static_cast<size_t>(y) * w_ + x) * 3 + c]; }
    uint8_t at(int y, int x, int c) const { return v_[(static_cast<size_t>(y) * w_ + x) * 3 + c]; }

    const std::vector<uint8_t>& bytes() const { return v_; }
    std::vector<uint8_t>& bytes() { return v_; }

    bool same_shape(const Image& other) const { return h_ == other.h_ && w_ == other.w_; }

private:
    int h_ = 0;
    int w_ = 0;
    std::vector<uint8_t> v_;
};

}  // namespace dermx

#endif  // DERMX_IMAGE_HPP
