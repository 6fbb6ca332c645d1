#include "dermx/resample.hpp"

#include <algorithm>
#include <cmath>

namespace dermx {

namespace {

inline int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

struct Taps {
    int i0, i1;
    double w1;  // weight of i1; i0 gets (1-w1)
};

inline Taps taps_for(double coord, int n) {
    double f = std::floor(coord);
    Taps t;
    t.i0 = clampi(static_cast<int>(f), 0, n - 1);
    t.i1 = clampi(static_cast<int>(f) + 1, 0, n - 1);
    t.w1 = coord - f;
    if (coord < 0.0) { t.i0 = t.i1 = 0; t.w1 = 0.0; }
    if (coord > n - 1) { t.i0 = t.i1 = n - 1; t.w1 = 0.0; }
    return t;
}

}  // namespace

double sample_bilinear(const Grid& src, double y, double x) {
    const Taps ty = taps_for(y, src.height());
    const Taps tx = taps_for(x, src.width());
    const double a = src.at(ty.i0, tx.i0);
    const double b = src.at(ty.i0, tx.i1);
    const double c = src.at(ty.i1, tx.i0);
    const double d = src.at(ty.i1, tx.i1);
    const double top = a + (b - a) * tx.w1;
    const double bot = c + (d - c) * tx.w1;
    return top + (bot - top) * ty.w1;
}

Grid resize_bilinear(const Grid& src, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw SchemaError("resize target dimensions must be >= 1");
    Grid out(out_h, out_w);
    const double sy = static_cast<double>(src.height()) / out_h;
    const double sx = static_cast<double>(src.width()) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double src_y = (y + 0.5) * sy - 0.5;
        for (int x = 0; x < out_w; ++x) {
            const double src_x = (x + 0.5) * sx - 0.5;
            out.at(y, x) = sample_bilinear(src, src_y, src_x);
        }
    }
    return out;
}

Image resize_bilinear(const Image& src, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw SchemaError("resize target dimensions must be >= 1");
    // Per-channel grids keep one bilinear implementation.
    Image out(out_h, out_w);
    for (int c = 0; c < 3; ++c) {
        Grid g(src.height(), src.width());
        for (int y = 0; y < src.height(); ++y)
            for (int x = 0; x < src.width(); ++x) g.at(y, x) = src.at(y, x, c);
        Grid r = resize_bilinear(g, out_h, out_w);
        for (int y = 0; y < out_h; ++y)
            for (int x = 0; x < out_w; ++x) {
                double v = std::round(r.at(y, x));
                out.at(y, x, c) = static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
            }
    }
    return out;
}

Grid resize_area(const Grid& src, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw SchemaError("resize target dimensions must be >= 1");
    Grid out(out_h, out_w);
    const double sy = static_cast<double>(src.height()) / out_h;
    const double sx = static_cast<double>(src.width()) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double y0 = y * sy, y1 = (y + 1) * sy;
        for (int x = 0; x < out_w; ++x) {
            const double x0 = x * sx, x1 = (x + 1) * sx;
            double acc = 0.0, area = 0.0;
            for (int yy = static_cast<int>(std::floor(y0)); yy < std::ceil(y1); ++yy) {
                const double hy = std::min<double>(y1, yy + 1) - std::max<double>(y0, yy);
                if (hy <= 0 || yy < 0 || yy >= src.height()) continue;
                for (int xx = static_cast<int>(std::floor(x0)); xx < std::ceil(x1); ++xx) {
                    const double hx = std::min<double>(x1, xx + 1) - std::max<double>(x0, xx);
                    if (hx <= 0 || xx < 0 || xx >= src.width()) continue;
                    acc += src.at(yy, xx) * hy * hx;
                    area += hy * hx;
                }
            }
            out.at(y, x) = area > 0 ? acc / area : 0.0;
        }
    }
    return out;
}

}  // namespace dermx
