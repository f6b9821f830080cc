#include "lupi/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lupi/rng.hpp"

namespace lupi {

BackgroundTexture texture_from_string(const std::string& s) {
    if (s == "flat") return BackgroundTexture::flat;
    if (s == "gradient") return BackgroundTexture::gradient;
    if (s == "speckle") return BackgroundTexture::speckle;
    throw ArgumentError("unknown background texture '" + s + "'");
}

std::string to_string(BackgroundTexture t) {
    switch (t) {
        case BackgroundTexture::flat: return "flat";
        case BackgroundTexture::gradient: return "gradient";
        default: return "speckle";
    }
}

void SyntheticSceneSpec::validate() const {
    if (image_size < 16) throw ArgumentError("SyntheticSceneSpec: image_size too small");
    if (patient_count < 1 || images_per_patient < 1)
        throw ArgumentError("SyntheticSceneSpec: need at least one patient and image");
    if (tumor_count_range.first < 0 || tumor_count_range.second < tumor_count_range.first)
        throw ArgumentError("SyntheticSceneSpec: bad tumor_count_range");
    if (tumor_axis_range.first < 1 || tumor_axis_range.second < tumor_axis_range.first)
        throw ArgumentError("SyntheticSceneSpec: bad tumor_axis_range");
    if (tumor_axis_range.second >= image_size / 2)
        throw ArgumentError("SyntheticSceneSpec: tumor axes must be < image_size/2");
    if (!(contrast_gap > 0.0 && contrast_gap <= 1.0))
        throw ArgumentError("SyntheticSceneSpec: contrast_gap outside (0,1]");
}

namespace {

constexpr double kBackgroundLevel = 0.005;
constexpr double kTissueLevel = 0.35;
constexpr double kEdgeBand = 0.12;  // soft-edge width in normalized ellipse units

struct BreastShape {
    double cy, ax, ay;  // half-ellipse anchored at x = 0

    // < 1 inside, grows outward
    double dist(double x, double y) const {
        const double dx = x / ax;
        const double dy = (y - cy) / ay;
        return dx * dx + dy * dy;
    }
};

struct Tumor {
    double cx, cy, a, b, cos_t, sin_t;

    bool contains(double x, double y) const {
        const double dx = x - cx, dy = y - cy;
        const double u = (dx * cos_t + dy * sin_t) / a;
        const double v = (-dx * sin_t + dy * cos_t) / b;
        return u * u + v * v <= 1.0;
    }
};

SceneImage make_image(const SyntheticSceneSpec& spec, const std::string& patient_id,
                      const std::string& image_id, Rng rng) {
    const int64_t s = spec.image_size;
    SceneImage out;
    out.patient_id = patient_id;
    out.image_id = image_id;
    out.image = GrayImage::filled(static_cast<int>(s), static_cast<int>(s), 0.0, 16);
    out.mask = MaskImage::zeros(static_cast<int>(s), static_cast<int>(s));

    BreastShape breast;
    breast.cy = static_cast<double>(s) * rng.uniform(0.45, 0.55);
    breast.ax = static_cast<double>(s) * rng.uniform(0.82, 0.95);
    breast.ay = static_cast<double>(s) * rng.uniform(0.42, 0.48);

    const double grad_slope = rng.uniform(-0.08, 0.08);

    for (int64_t y = 0; y < s; ++y)
        for (int64_t x = 0; x < s; ++x) {
            const double d = breast.dist(static_cast<double>(x), static_cast<double>(y));
            double t = std::clamp((1.0 - d) / kEdgeBand, 0.0, 1.0);
            t = t * t * (3.0 - 2.0 * t);  // smoothstep
            double tissue = kTissueLevel;
            if (spec.background_texture == BackgroundTexture::gradient)
                tissue += grad_slope * (static_cast<double>(y) / static_cast<double>(s) - 0.5);
            double v = kBackgroundLevel + (tissue - kBackgroundLevel) * t;
            if (spec.background_texture == BackgroundTexture::speckle)
                v += rng.uniform(-0.03, 0.03) * t;
            out.image.at(static_cast<int>(x), static_cast<int>(y)) = std::clamp(v, 0.0, 1.0);
        }

    const int64_t tumor_count =
        spec.tumor_count_range.first == spec.tumor_count_range.second
            ? spec.tumor_count_range.first
            : rng.range(spec.tumor_count_range.first, spec.tumor_count_range.second);

    for (int64_t i = 0; i < tumor_count; ++i) {
        Tumor tumor{};
        double a = static_cast<double>(
            rng.range(spec.tumor_axis_range.first, spec.tumor_axis_range.second));
        double b = static_cast<double>(
            rng.range(spec.tumor_axis_range.first, spec.tumor_axis_range.second));
        bool placed = false;
        for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
            const double theta = rng.uniform(0.0, 3.14159265358979323846);
            tumor = {rng.uniform(0.05 * s, 0.85 * s), rng.uniform(0.1 * s, 0.9 * s),
                     a, b, std::cos(theta), std::sin(theta)};
            // Keep the whole tumor inside the fully-opaque part of the breast:
            // probe its boundary against the soft-edge threshold.
            placed = true;
            for (int p = 0; p < 64 && placed; ++p) {
                const double phi = 2.0 * 3.14159265358979323846 * p / 64.0;
                const double bx = tumor.cx + a * std::cos(phi) * tumor.cos_t -
                                  b * std::sin(phi) * tumor.sin_t;
                const double by = tumor.cy + a * std::cos(phi) * tumor.sin_t +
                                  b * std::sin(phi) * tumor.cos_t;
                if (breast.dist(bx, by) > 1.0 - kEdgeBand) placed = false;
            }
            if (!placed && attempt % 100 == 99) {
                a = std::max(a * 0.8, static_cast<double>(spec.tumor_axis_range.first));
                b = std::max(b * 0.8, static_cast<double>(spec.tumor_axis_range.first));
            }
        }
        if (!placed) continue;

        const int64_t x_lo = std::max<int64_t>(0, static_cast<int64_t>(tumor.cx - a - b - 2));
        const int64_t x_hi = std::min<int64_t>(s - 1, static_cast<int64_t>(tumor.cx + a + b + 2));
        const int64_t y_lo = std::max<int64_t>(0, static_cast<int64_t>(tumor.cy - a - b - 2));
        const int64_t y_hi = std::min<int64_t>(s - 1, static_cast<int64_t>(tumor.cy + a + b + 2));
        for (int64_t y = y_lo; y <= y_hi; ++y)
            for (int64_t x = x_lo; x <= x_hi; ++x)
                if (tumor.contains(static_cast<double>(x), static_cast<double>(y))) {
                    out.mask.at(static_cast<int>(x), static_cast<int>(y)) = 1;
                    const double base = out.image.at(static_cast<int>(x), static_cast<int>(y));
                    out.image.at(static_cast<int>(x), static_cast<int>(y)) =
                        std::clamp(base + spec.contrast_gap, 0.0, 1.0);
                }
    }
    return out;
}

}  // namespace

std::vector<SceneImage> generate_scene(const SyntheticSceneSpec& spec) {
    spec.validate();
    std::vector<SceneImage> out;
    const Rng root(spec.seed);
    for (int64_t p = 0; p < spec.patient_count; ++p) {
        char pid[16];
        std::snprintf(pid, sizeof(pid), "pt%03lld", static_cast<long long>(p));
        for (int64_t i = 0; i < spec.images_per_patient; ++i) {
            const std::string image_id =
                std::string(pid) + "_img" + std::to_string(i);
            out.push_back(make_image(spec, pid, image_id, root.child(image_id)));
        }
    }
    return out;
}

}  // namespace lupi
