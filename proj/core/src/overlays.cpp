#include "dermx/overlays.hpp"

#include <algorithm>
#include <cmath>

#include "dermx/bundle.hpp"
#include "dermx/errors.hpp"
#include "dermx/image_io.hpp"

namespace dermx {

namespace {

constexpr int kSeparator = 2;

uint8_t clamp8(double v) { return static_cast<uint8_t>(std::clamp(v, 0.0, 255.0)); }

// dimmed grayscale base so the overlay color dominates where the map is hot
void paint_panel(Image& canvas, int x_offset, const Image& photo, const Grid& map,
                 double r, double g, double b, bool signed_map) {
    for (int y = 0; y < photo.height(); ++y) {
        for (int x = 0; x < photo.width(); ++x) {
            const double gray = 0.4 * (0.299 * photo.at(y, x, 0) + 0.587 * photo.at(y, x, 1) +
                                       0.114 * photo.at(y, x, 2));
            double v = map.at(y, x);
            double cr = r, cg = g, cb = b;
            if (signed_map) {
                // negative values flip red<->blue
                if (v < 0) {
                    cr = 0.0;
                    cb = 1.0;
                    v = -v;
                }
            }
            v = std::clamp(v, 0.0, 1.0);
            canvas.at(y, x_offset + x, 0) = clamp8(gray + 255.0 * v * cr);
            canvas.at(y, x_offset + x, 1) = clamp8(gray + 255.0 * v * cg);
            canvas.at(y, x_offset + x, 2) = clamp8(gray + 255.0 * v * cb);
        }
    }
}

}  // namespace

Image render_overlay_image(const Image& photo, const Grid& expert, const Grid& attention) {
    if (expert.height() != photo.height() || expert.width() != photo.width() ||
        attention.height() != photo.height() || attention.width() != photo.width())
        throw SchemaError("render_overlays: all panels must share the photo's pixel grid");

    const int h = photo.height(), w = photo.width();
    Image canvas(h, 3 * w + 2 * kSeparator, 255);

    paint_panel(canvas, 0, photo, expert, 0.0, 1.0, 0.0, false);
    paint_panel(canvas, w + kSeparator, photo, attention, 1.0, 0.0, 0.0, false);
    Grid diff(h, w);
    for (size_t i = 0; i < diff.size(); ++i) diff[i] = attention[i] - expert[i];
    paint_panel(canvas, 2 * (w + kSeparator), photo, diff, 1.0, 0.0, 0.0, true);
    return canvas;
}

void render_overlays(const Image& photo, const Grid& expert, const Grid& attention,
                     const std::filesystem::path& out_path) {
    const std::vector<uint8_t> png = encode_png(render_overlay_image(photo, expert, attention));
    atomic_write(out_path, std::string(png.begin(), png.end()));
}

}  // namespace dermx
