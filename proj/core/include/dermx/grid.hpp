#ifndef DERMX_GRID_HPP
#define DERMX_GRID_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dermx/errors.hpp"

namespace dermx {

// Dense row-major h x w grid of doubles. Shared pixel container for fuzzy
// maps, attention maps and intermediate resampling results.
class Grid {
public:
    Grid() = default;
    Grid(int h, int w, double fill = 0.0) : h_(h), w_(w), v_(static_cast<size_t>(h) * w, fill) {
        if (h < 1 || w < 1) throw SchemaError("grid dimensions must be >= 1");
    }
    Grid(int h, int w, std::vector<double> values) : h_(h), w_(w), v_(std::move(values)) {
        if (h < 1 || w < 1) throw SchemaError("grid dimensions must be >= 1");
        if (v_.size() != static_cast<size_t>(h) * w) throw SchemaError("grid value count does not match dimensions");
    }

    int height() const { return h_; }
    int width() const { return w_; }
    size_t size() const { return v_.size(); }
    bool same_shape(const Grid& other) const { return h_ == other.h_ && w_ == other.w_; }

    double& at(int y, int x) { return v_[static_cast<size_t>(y) * w_ + x]; }
    double at(int y, int x) const { return v_[static_cast<size_t>(y) * w_ + x]; }
    double& operator[](size_t i) { return v_[i]; }
    double operator[](size_t i) const { return v_[i]; }

    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }

    double sum() const {
        double s = 0.0;
        for (double x : v_) s += x;
        return s;
    }
    double max() const {
        double m = v_.empty() ? 0.0 : v_[0];
        for (double x : v_) m = x > m ? x : m;
        return m;
    }

private:
    int h_ = 0;
    int w_ = 0;
    std::vector<double> v_;
};

// Binary mask: values restricted to {0,1}, stored compactly.
class Mask {
public:
    Mask() = default;
    Mask(int h, int w, uint8_t fill = 0) : h_(h), w_(w), v_(static_cast<size_t>(h) * w, fill) {
        if (h < 1 || w < 1) throw SchemaError("mask dimensions must be >= 1");
    }
    Mask(int h, int w, std::vector<uint8_t> values) : h_(h), w_(w), v_(std::move(values)) {
        if (v_.size() != static_cast<size_t>(h) * w) throw SchemaError("mask value count does not match dimensions");
    }

    int height() const { return h_; }
    int width() const { return w_; }
    size_t size() const { return v_.size(); }
    bool same_shape(const Mask& other) const { return h_ == other.h_ && w_ == other.w_; }

    uint8_t& at(int y, int x) { return v_[static_cast<size_t>(y) * w_ + x]; }
    uint8_t at(int y, int x) const { return v_[static_cast<size_t>(y) * w_ + x]; }
    uint8_t& operator[](size_t i) { return v_[i]; }
    uint8_t operator[](size_t i) const { return v_[i]; }

    const std::vector<uint8_t>& values() const { return v_; }
    std::vector<uint8_t>& values() { return v_; }

    size_t count_on() const {
        size_t n = 0;
        for (uint8_t x : v_) n += (x != 0);
        return n;
    }
    bool any() const { return count_on() > 0; }

    Grid to_grid() const {
        Grid g(h_, w_);
        for (size_t i = 0; i < v_.size(); ++i) g[i] = v_[i] ? 1.0 : 0.0;
        return g;
    }

private:
    int h_ = 0;
    int w_ = 0;
    std::vector<uint8_t> v_;
};

// Fuzzy localization map: per-pixel fraction of contributing raters.
// Fusion produces exact rationals count/denominator; resampled maps are
// arbitrary reals in [0,1].
struct FuzzyMask {
    Grid values;
    std::string characteristic;
    std::string image_id;
};

// Grad-CAM style attention map, values in [0,1].
struct AttentionMap {
    Grid values;
    std::string characteristic;
    std::string image_id;
};

}  // namespace dermx

#endif  // DERMX_GRID_HPP
