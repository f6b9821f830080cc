#pragma once

#include <array>
#include <string>
#include <vector>

#include "lupi/filters.hpp"
#include "lupi/image.hpp"

namespace lupi {

// Patch extraction parameters. Defaults are the full-scale values
// (h_ppi = nh_ppi = 40, mar = 0.01, bar = 0.8, 1024x1024 patches); desk-scale
// runs shrink patch_size and the per-image counts through configuration.
struct ExtractionParams {
    int64_t h_ppi = 40;   // healthy patches per image
    int64_t nh_ppi = 40;  // non-healthy patches per image
    double mar = 0.01;    // mass-area-ratio threshold
    double bar = 0.8;     // breast-area-ratio threshold
    int64_t patch_size = 1024;
    int64_t max_attempts_per_patch = 200;
    double background_threshold = 0.02;

    void validate() const;
};

enum class ClassTag { healthy, non_healthy };

std::string to_string(ClassTag tag);
ClassTag class_tag_from_string(const std::string& s);

struct PatchRecord {
    GrayImage image;  // patch_size x patch_size crop
    MaskImage mask;
    std::string patient_id;
    std::string source_image_id;
    int64_t origin_x = 0;  // top-left in the source image
    int64_t origin_y = 0;
    ClassTag class_tag = ClassTag::healthy;
};

// The three teacher channels: [original, histogram-equalized,
// contrast-adjusted], plus the carried-through annotation mask.
struct EnhancedPatch {
    std::array<GrayImage, 3> channels;
    MaskImage mask;
};

// Fraction of mask pixels labelled tumor.
double mass_area_ratio(const MaskImage& mask);

// Fraction of pixels brighter than the background threshold.
double breast_area_ratio(const GrayImage& img, double background_threshold);

struct ExtractionResult {
    std::vector<PatchRecord> patches;  // healthy first, then non-healthy
    int64_t shortfall_healthy = 0;
    int64_t shortfall_non_healthy = 0;

    int64_t shortfall_total() const { return shortfall_healthy + shortfall_non_healthy; }
};

// Rejection-samples patch origins from an RNG stream derived from
// (seed, source_image_id): healthy patches must have zero tumor pixels,
// non-healthy ones mass_area_ratio >= mar, and both breast_area_ratio >= bar.
// Patches lie fully inside the image; duplicate origins within one image are
// rejected. Falling short after max_attempts_per_patch * requested attempts
// is reported, not an error. Identical inputs and seed give identical output.
ExtractionResult extract_patches(const GrayImage& img, const MaskImage& mask,
                                 const ExtractionParams& params, uint64_t seed,
                                 const std::string& patient_id,
                                 const std::string& source_image_id);

EnhancedPatch enhance_patch(const PatchRecord& patch);

}  // namespace lupi
