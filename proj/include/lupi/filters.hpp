#pragma once

#include "lupi/image.hpp"

namespace lupi {

inline constexpr int kHistogramBins = 256;
inline constexpr double kContrastLowPercentile = 2.0;
inline constexpr double kContrastHighPercentile = 98.0;

// Normalized cumulative-histogram mapping over kHistogramBins bins. Monotone,
// dimension-preserving, output in [0,1].
GrayImage histogram_equalize(const GrayImage& img);

struct ContrastResult {
    GrayImage image;
    bool degenerate = false;  // percentile(p_low) == percentile(p_high)
};

// Linear stretch mapping the p_low percentile to 0 and the p_high percentile
// to 1, clamping outside values. A zero-dynamic-range input yields an all-zero
// image with the degenerate flag set.
ContrastResult adjust_contrast(const GrayImage& img,
                               double p_low = kContrastLowPercentile,
                               double p_high = kContrastHighPercentile);

// Linear-interpolation quantile of the image intensities, p in [0,100].
double intensity_percentile(const GrayImage& img, double p);

}  // namespace lupi
