#ifndef DERMX_OVERLAYS_HPP
#define DERMX_OVERLAYS_HPP

#include <filesystem>

#include "dermx/grid.hpp"
#include "dermx/image.hpp"

namespace dermx {

// Three-panel composite: expert fuzzy map (green), model attention (red),
// signed difference (red = model excess, blue = expert excess), each drawn
// over the dimmed grayscale photo. All inputs share the photo's pixel grid.
Image render_overlay_image(const Image& photo, const Grid& expert, const Grid& attention);

void render_overlays(const Image& photo, const Grid& expert, const Grid& attention,
                     const std::filesystem::path& out_path);

}  // namespace dermx

#endif  // DERMX_OVERLAYS_HPP
