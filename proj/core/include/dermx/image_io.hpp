#ifndef DERMX_IMAGE_IO_HPP
#define DERMX_IMAGE_IO_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dermx/grid.hpp"
#include "dermx/image.hpp"

namespace dermx {

Image read_image(const std::filesystem::path& path);
void write_image_png(const std::filesystem::path& path, const Image& img);

// Masks are single-channel 8-bit files on the photo's pixel grid;
// 0 = absent, any nonzero (canonically 255) = present.
Mask read_mask(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const Mask& mask);

// In-memory PNG encode/decode, used by the bundle container.
std::vector<uint8_t> encode_png(const Image& img);
Image decode_image(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> encode_mask_png(const Mask& mask);
Mask decode_mask(const std::vector<uint8_t>& bytes);

}  // namespace dermx

#endif  // DERMX_IMAGE_IO_HPP
