#ifndef DERMX_AUGMENT_HPP
#define DERMX_AUGMENT_HPP

#include <cstdint>
#include <random>
#include <utility>

#include "dermx/image.hpp"

namespace dermx {

// Magnitudes follow the training hyperparameter table: rotation in degrees,
// photometric values as jitter factors around 1, translate as fractions of
// the image size, hue as a fraction of the hue circle.
struct AugmentConfig {
    double rotation = 10.0;
    double zoom = 0.15;
    double brightness = 0.35;
    double contrast = 0.20;
    double saturation = 0.20;
    std::pair<double, double> scale = {0.85, 1.15};
    std::pair<double, double> translate = {0.15, 0.15};
    double hue = 0.15;

    static AugmentConfig identity() {
        return {0.0, 0.0, 0.0, 0.0, 0.0, {1.0, 1.0}, {0.0, 0.0}, 0.0};
    }
};

// Random affine (rotation/zoom/scale/translate, bilinear, clamp-to-edge) plus
// photometric jitter. Output dimensions equal the input; pixel values stay in
// [0,255]. Degenerate magnitudes reproduce the input exactly. Draws the same
// number of variates regardless of magnitudes, so streams stay aligned.
Image augment(const Image& image, const AugmentConfig& config, std::mt19937_64& rng);

// Per-sample augmentation stream: worker count must not change results.
std::mt19937_64 augment_rng(uint64_t seed, int epoch, const std::string& image_id);

}  // namespace dermx

#endif  // DERMX_AUGMENT_HPP
