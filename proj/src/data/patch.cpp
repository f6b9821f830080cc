#include "lupi/patch.hpp"

#include <set>

#include "lupi/rng.hpp"

namespace lupi {

void ExtractionParams::validate() const {
    if (!(mar >= 0.0 && mar <= 1.0)) throw ArgumentError("ExtractionParams: mar outside [0,1]");
    if (!(bar >= 0.0 && bar <= 1.0)) throw ArgumentError("ExtractionParams: bar outside [0,1]");
    if (patch_size < 1) throw ArgumentError("ExtractionParams: patch_size must be >= 1");
    if (max_attempts_per_patch < 1)
        throw ArgumentError("ExtractionParams: max_attempts_per_patch must be >= 1");
    if (h_ppi < 0 || nh_ppi < 0) throw ArgumentError("ExtractionParams: negative patch count");
    if (!(background_threshold >= 0.0 && background_threshold <= 1.0))
        throw ArgumentError("ExtractionParams: background_threshold outside [0,1]");
}

std::string to_string(ClassTag tag) {
    return tag == ClassTag::healthy ? "healthy" : "non-healthy";
}

ClassTag class_tag_from_string(const std::string& s) {
    if (s == "healthy") return ClassTag::healthy;
    if (s == "non-healthy") return ClassTag::non_healthy;
    throw FormatError("unknown class tag '" + s + "'");
}

double mass_area_ratio(const MaskImage& mask) {
    mask.validate();
    int64_t tumor = 0;
    for (uint8_t v : mask.labels) tumor += v;
    return static_cast<double>(tumor) / static_cast<double>(mask.pixel_count());
}

double breast_area_ratio(const GrayImage& img, double background_threshold) {
    img.validate();
    int64_t tissue = 0;
    for (double v : img.data)
        if (v > background_threshold) ++tissue;
    return static_cast<double>(tissue) / static_cast<double>(img.pixel_count());
}

namespace {

GrayImage crop_image(const GrayImage& img, int64_t x0, int64_t y0, int64_t size) {
    GrayImage out;
    out.width = static_cast<int>(size);
    out.height = static_cast<int>(size);
    out.source_bit_depth = img.source_bit_depth;
    out.data.resize(static_cast<size_t>(size * size));
    for (int64_t y = 0; y < size; ++y) {
        const double* src = img.data.data() + (y0 + y) * img.width + x0;
        std::copy(src, src + size, out.data.data() + y * size);
    }
    return out;
}

MaskImage crop_mask(const MaskImage& mask, int64_t x0, int64_t y0, int64_t size) {
    MaskImage out;
    out.width = static_cast<int>(size);
    out.height = static_cast<int>(size);
    out.labels.resize(static_cast<size_t>(size * size));
    for (int64_t y = 0; y < size; ++y) {
        const uint8_t* src = mask.labels.data() + (y0 + y) * mask.width + x0;
        std::copy(src, src + size, out.labels.data() + y * size);
    }
    return out;
}

bool has_tumor_pixel(const MaskImage& mask) {
    for (uint8_t v : mask.labels)
        if (v) return true;
    return false;
}

}  // namespace

ExtractionResult extract_patches(const GrayImage& img, const MaskImage& mask,
                                 const ExtractionParams& params, uint64_t seed,
                                 const std::string& patient_id,
                                 const std::string& source_image_id) {
    img.validate();
    mask.validate();
    params.validate();
    if (img.width != mask.width || img.height != mask.height)
        throw ArgumentError("extract_patches: image/mask dimension mismatch");
    if (img.width < params.patch_size || img.height < params.patch_size)
        throw ArgumentError("extract_patches: image smaller than patch_size");

    Rng rng = Rng(seed).child(source_image_id);
    const int64_t max_x = img.width - params.patch_size;
    const int64_t max_y = img.height - params.patch_size;
    std::set<std::pair<int64_t, int64_t>> used_origins;

    ExtractionResult result;
    auto sample_class = [&](ClassTag tag, int64_t want) {
        int64_t found = 0;
        const int64_t budget = params.max_attempts_per_patch * want;
        for (int64_t attempt = 0; attempt < budget && found < want; ++attempt) {
            const int64_t x0 = static_cast<int64_t>(rng.below(static_cast<uint64_t>(max_x + 1)));
            const int64_t y0 = static_cast<int64_t>(rng.below(static_cast<uint64_t>(max_y + 1)));
            if (used_origins.count({x0, y0})) continue;

            MaskImage mask_crop = crop_mask(mask, x0, y0, params.patch_size);
            if (tag == ClassTag::healthy) {
                if (has_tumor_pixel(mask_crop)) continue;
            } else {
                if (mass_area_ratio(mask_crop) < params.mar) continue;
            }
            GrayImage img_crop = crop_image(img, x0, y0, params.patch_size);
            if (breast_area_ratio(img_crop, params.background_threshold) < params.bar) continue;

            used_origins.insert({x0, y0});
            PatchRecord rec;
            rec.image = std::move(img_crop);
            rec.mask = std::move(mask_crop);
            rec.patient_id = patient_id;
            rec.source_image_id = source_image_id;
            rec.origin_x = x0;
            rec.origin_y = y0;
            rec.class_tag = tag;
            result.patches.push_back(std::move(rec));
            ++found;
        }
        return want - found;
    };

    result.shortfall_healthy = sample_class(ClassTag::healthy, params.h_ppi);
    result.shortfall_non_healthy = sample_class(ClassTag::non_healthy, params.nh_ppi);
    return result;
}

EnhancedPatch enhance_patch(const PatchRecord& patch) {
    EnhancedPatch out;
    out.channels[0] = patch.image;
    out.channels[1] = histogram_equalize(patch.image);
    out.channels[2] = adjust_contrast(patch.image).image;
    out.mask = patch.mask;
    return out;
}

}  // namespace lupi
