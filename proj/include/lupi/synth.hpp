#pragma once

#include <string>
#include <vector>

#include "lupi/image.hpp"

namespace lupi {

enum class BackgroundTexture { flat, gradient, speckle };

BackgroundTexture texture_from_string(const std::string& s);
std::string to_string(BackgroundTexture t);

// Deterministic mammogram-like scene generator: a soft-edged half-ellipse of
// mid-intensity tissue on a near-zero background, with brighter elliptical
// tumors inside it and a mask marking exactly those tumors. Tumors are
// separable from tissue by intensity at the default contrast gap, so a small
// network trains to high F1 in minutes; the generator exercises the pipeline,
// it does not model radiology.
struct SyntheticSceneSpec {
    int64_t image_size = 256;
    int64_t patient_count = 4;
    int64_t images_per_patient = 1;
    std::pair<int64_t, int64_t> tumor_count_range = {1, 3};
    std::pair<int64_t, int64_t> tumor_axis_range = {12, 24};  // semi-axes, pixels
    BackgroundTexture background_texture = BackgroundTexture::flat;
    double contrast_gap = 0.3;  // tumor minus tissue intensity
    uint64_t seed = 0;

    void validate() const;
};

struct SceneImage {
    GrayImage image;
    MaskImage mask;
    std::string patient_id;
    std::string image_id;
};

std::vector<SceneImage> generate_scene(const SyntheticSceneSpec& spec);

}  // namespace lupi
