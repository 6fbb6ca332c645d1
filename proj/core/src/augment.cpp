#include "dermx/augment.hpp"

#include <algorithm>
#include <cmath>

#include "dermx/grid.hpp"
#include "dermx/resample.hpp"

namespace dermx {

namespace {

struct Hsv {
    double h, s, v;  // h in [0,1)
};

Hsv rgb_to_hsv(double r, double g, double b) {
    const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
    const double d = mx - mn;
    Hsv out{0.0, mx > 0 ? d / mx : 0.0, mx};
    if (d > 0) {
        if (mx == r) out.h = std::fmod((g - b) / d, 6.0) / 6.0;
        else if (mx == g) out.h = ((b - r) / d + 2.0) / 6.0;
        else out.h = ((r - g) / d + 4.0) / 6.0;
        if (out.h < 0) out.h += 1.0;
    }
    return out;
}

void hsv_to_rgb(const Hsv& in, double& r, double& g, double& b) {
    const double h6 = in.h * 6.0;
    const int i = static_cast<int>(std::floor(h6)) % 6;
    const double f = h6 - std::floor(h6);
    const double p = in.v * (1 - in.s);
    const double q = in.v * (1 - in.s * f);
    const double t = in.v * (1 - in.s * (1 - f));
    switch (i) {
        case 0: r = in.v; g = t; b = p; break;
        case 1: r = q; g = in.v; b = p; break;
        case 2: r = p; g = in.v; b = t; break;
        case 3: r = p; g = q; b = in.v; break;
        case 4: r = t; g = p; b = in.v; break;
        default: r = in.v; g = p; b = q; break;
    }
}

uint8_t to_byte(double v) { return static_cast<uint8_t>(std::clamp(std::round(v * 255.0), 0.0, 255.0)); }

}  // namespace

std::mt19937_64 augment_rng(uint64_t seed, int epoch, const std::string& image_id) {
    // FNV-1a over (seed, epoch, id): stable across platforms
    uint64_t h = 1469598103934665603ull;
    auto mix = [&h](uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= (v >> (8 * i)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix(seed);
    mix(static_cast<uint64_t>(epoch));
    for (char c : image_id) {
        h ^= static_cast<uint8_t>(c);
        h *= 1099511628211ull;
    }
    return std::mt19937_64(h);
}

Image augment(const Image& image, const AugmentConfig& config, std::mt19937_64& rng) {
    auto draw = [&rng](double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    // fixed draw order regardless of magnitudes
    const double angle = draw(-config.rotation, config.rotation) * M_PI / 180.0;
    const double zoom = 1.0 + draw(-config.zoom, config.zoom);
    const double scale = draw(config.scale.first, config.scale.second);
    const double tx = draw(-config.translate.first, config.translate.first) * image.width();
    const double ty = draw(-config.translate.second, config.translate.second) * image.height();
    const double brightness = 1.0 + draw(-config.brightness, config.brightness);
    const double contrast = 1.0 + draw(-config.contrast, config.contrast);
    const double saturation = 1.0 + draw(-config.saturation, config.saturation);
    const double hue_shift = draw(-config.hue, config.hue);

    const int h = image.height(), w = image.width();
    Image out = image;

    const double total_scale = zoom * scale;
    const bool warp_needed = angle != 0.0 || total_scale != 1.0 || tx != 0.0 || ty != 0.0;
    if (warp_needed) {
        // inverse-map output pixels through rotation+scale about the center
        const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
        const double cos_a = std::cos(angle), sin_a = std::sin(angle);
        const double inv = 1.0 / total_scale;
        std::array<Grid, 3> channels = {Grid(h, w), Grid(h, w), Grid(h, w)};
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) channels[c].at(y, x) = image.at(y, x, c);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double dy = y - cy - ty, dx = x - cx - tx;
                const double sy = (cos_a * dy - sin_a * dx) * inv + cy;
                const double sx = (sin_a * dy + cos_a * dx) * inv + cx;
                for (int c = 0; c < 3; ++c) {
                    const double v = sample_bilinear(channels[c], sy, sx);
                    out.at(y, x, c) = static_cast<uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
                }
            }
        }
    }

    const bool photometric = brightness != 1.0 || contrast != 1.0 || saturation != 1.0 ||
                             hue_shift != 0.0;
    if (!photometric) return out;

    // image-wide gray mean anchors the contrast jitter
    double gray_mean = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            gray_mean += 0.299 * out.at(y, x, 0) + 0.587 * out.at(y, x, 1) + 0.114 * out.at(y, x, 2);
    gray_mean /= 255.0 * h * w;

    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double r = out.at(y, x, 0) / 255.0;
            double g = out.at(y, x, 1) / 255.0;
            double b = out.at(y, x, 2) / 255.0;
            r *= brightness;
            g *= brightness;
            b *= brightness;
            r = gray_mean + (r - gray_mean) * contrast;
            g = gray_mean + (g - gray_mean) * contrast;
            b = gray_mean + (b - gray_mean) * contrast;
            const double gray = 0.299 * r + 0.587 * g + 0.114 * b;
            r = gray + (r - gray) * saturation;
            g = gray + (g - gray) * saturation;
            b = gray + (b - gray) * saturation;
            if (hue_shift != 0.0) {
                Hsv hsv = rgb_to_hsv(std::clamp(r, 0.0, 1.0), std::clamp(g, 0.0, 1.0),
                                     std::clamp(b, 0.0, 1.0));
                hsv.h = std::fmod(hsv.h + hue_shift + 1.0, 1.0);
                hsv_to_rgb(hsv, r, g, b);
            }
            out.at(y, x, 0) = to_byte(r);
            out.at(y, x, 1) = to_byte(g);
            out.at(y, x, 2) = to_byte(b);
        }
    }
    return out;
}

}  // namespace dermx
