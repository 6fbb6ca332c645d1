#ifndef DERMX_RESAMPLE_HPP
#define DERMX_RESAMPLE_HPP

#include "dermx/grid.hpp"
#include "dermx/image.hpp"

namespace dermx {

// Bilinear resampling with half-pixel centers and clamp-to-edge borders.
// Output pixel (y,x) samples source coordinate ((y+0.5)*sy-0.5, (x+0.5)*sx-0.5).
// Identity-size resampling reproduces the input exactly.
Grid resize_bilinear(const Grid& src, int out_h, int out_w);

// Same convention, per RGB channel; result rounded to nearest and clamped.
Image resize_bilinear(const Image& src, int out_h, int out_w);

// Area-averaging downscale (box filter over the source footprint of each
// output pixel). Exposed for the fusion ablation flag.
Grid resize_area(const Grid& src, int out_h, int out_w);

// Samples a grid at a continuous source location (bilinear, clamp-to-edge).
double sample_bilinear(const Grid& src, double y, double x);

}  // namespace dermx

#endif  // DERMX_RESAMPLE_HPP
