#include "lupi/image.hpp"

#include <cstdio>

namespace lupi {

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

GrayImage GrayImage::filled(int w, int h, double value, int bit_depth) {
    GrayImage img;
    img.width = w;
    img.height = h;
    img.source_bit_depth = bit_depth;
    img.data.assign(static_cast<size_t>(w) * h, value);
    return img;
}

void GrayImage::validate() const {
    if (width <= 0 || height <= 0)
        throw ArgumentError("GrayImage: non-positive dimensions");
    if (data.size() != static_cast<size_t>(pixel_count()))
        throw ArgumentError("GrayImage: data length != width*height");
    if (source_bit_depth != 8 && source_bit_depth != 16)
        throw ArgumentError("GrayImage: bit depth must be 8 or 16");
    for (double v : data)
        if (!(v >= 0.0 && v <= 1.0))
            throw ArgumentError("GrayImage: intensity outside [0,1]");
}

MaskImage MaskImage::zeros(int w, int h) {
    MaskImage m;
    m.width = w;
    m.height = h;
    m.labels.assign(static_cast<size_t>(w) * h, 0);
    return m;
}

void MaskImage::validate() const {
    if (width <= 0 || height <= 0)
        throw ArgumentError("MaskImage: non-positive dimensions");
    if (labels.size() != static_cast<size_t>(pixel_count()))
        throw ArgumentError("MaskImage: labels length != width*height");
    for (uint8_t v : labels)
        if (v > 1) throw ArgumentError("MaskImage: label outside {0,1}");
}

bool operator==(const GrayImage& a, const GrayImage& b) {
    return a.width == b.width && a.height == b.height &&
           a.source_bit_depth == b.source_bit_depth && a.data == b.data;
}

bool operator==(const MaskImage& a, const MaskImage& b) {
    return a.width == b.width && a.height == b.height && a.labels == b.labels;
}

}  // namespace lupi
