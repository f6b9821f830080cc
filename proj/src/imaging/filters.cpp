#include "lupi/filters.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace lupi {

GrayImage histogram_equalize(const GrayImage& img) {
    img.validate();
    std::array<int64_t, kHistogramBins> hist{};
    for (double v : img.data) {
        int bin = static_cast<int>(v * kHistogramBins);
        if (bin >= kHistogramBins) bin = kHistogramBins - 1;  // v == 1.0
        ++hist[static_cast<size_t>(bin)];
    }
    std::array<double, kHistogramBins> cdf{};
    int64_t running = 0;
    const double total = static_cast<double>(img.pixel_count());
    for (int b = 0; b < kHistogramBins; ++b) {
        running += hist[static_cast<size_t>(b)];
        cdf[static_cast<size_t>(b)] = static_cast<double>(running) / total;
    }
    GrayImage out = img;
    for (double& v : out.data) {
        int bin = static_cast<int>(v * kHistogramBins);
        if (bin >= kHistogramBins) bin = kHistogramBins - 1;
        v = cdf[static_cast<size_t>(bin)];
    }
    return out;
}

double intensity_percentile(const GrayImage& img, double p) {
    if (!(p >= 0.0 && p <= 100.0)) throw ArgumentError("percentile outside [0,100]");
    std::vector<double> sorted(img.data);
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    if (n == 1) return sorted[0];
    const double pos = p / 100.0 * static_cast<double>(n - 1);
    const auto lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, n - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ContrastResult adjust_contrast(const GrayImage& img, double p_low, double p_high) {
    img.validate();
    if (!(p_low >= 0.0 && p_low < p_high && p_high <= 100.0))
        throw ArgumentError("adjust_contrast: need 0 <= p_low < p_high <= 100");

    // One sort shared by both percentiles.
    std::vector<double> sorted(img.data);
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    auto quantile = [&](double p) {
        if (n == 1) return sorted[0];
        const double pos = p / 100.0 * static_cast<double>(n - 1);
        const auto lo = static_cast<size_t>(pos);
        const size_t hi = std::min(lo + 1, n - 1);
        const double frac = pos - static_cast<double>(lo);
        return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    };
    const double lo = quantile(p_low);
    const double hi = quantile(p_high);

    ContrastResult result;
    result.image = img;
    if (!(hi > lo)) {
        result.degenerate = true;
        std::fill(result.image.data.begin(), result.image.data.end(), 0.0);
        return result;
    }
    const double inv_span = 1.0 / (hi - lo);
    for (double& v : result.image.data) v = std::clamp((v - lo) * inv_span, 0.0, 1.0);
    return result;
}

}  // namespace lupi
