#pragma once

#include <cstdint>
#include <vector>

#include "lupi/core.hpp"

namespace lupi {

// Grayscale raster with intensities normalized to [0,1]. source_bit_depth
// remembers the quantization of the file the pixels came from (8 or 16) so a
// round trip through disk is bit-exact.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // row-major, width*height
    int source_bit_depth = 8;

    int64_t pixel_count() const { return static_cast<int64_t>(width) * height; }
    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }

    static GrayImage filled(int w, int h, double value, int bit_depth = 8);
    void validate() const;  // throws ArgumentError on broken invariants
};

// Per-pixel binary annotation: 0 = healthy tissue, 1 = tumorous tissue.
struct MaskImage {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> labels;  // row-major, values in {0,1}

    int64_t pixel_count() const { return static_cast<int64_t>(width) * height; }
    uint8_t& at(int x, int y) { return labels[static_cast<size_t>(y) * width + x]; }
    uint8_t at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }

    static MaskImage zeros(int w, int h);
    void validate() const;
};

bool operator==(const GrayImage& a, const GrayImage& b);
bool operator==(const MaskImage& a, const MaskImage& b);

}  // namespace lupi
