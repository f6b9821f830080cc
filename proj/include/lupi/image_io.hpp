#pragma once

#include <filesystem>

#include "lupi/image.hpp"

namespace lupi {

// Portable grayscale rasters: 8/16-bit PNG and binary PGM (P5). Intensities
// are divided by (2^bit_depth - 1) on load; save_gray_image re-quantizes at
// img.source_bit_depth and round-trips bit-exactly.
GrayImage load_gray_image(const std::filesystem::path& path);
void save_gray_image(const GrayImage& img, const std::filesystem::path& path);

// Masks are 8-bit rasters; any nonzero pixel means tumor.
MaskImage load_mask_image(const std::filesystem::path& path);
void save_mask_image(const MaskImage& mask, const std::filesystem::path& path);

}  // namespace lupi
