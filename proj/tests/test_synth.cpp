#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lupi/patch.hpp"
#include "lupi/synth.hpp"

using namespace lupi;

TEST_CASE("generate_scene is seed-deterministic") {
    SyntheticSceneSpec spec;
    spec.image_size = 128;
    spec.patient_count = 3;
    spec.seed = 77;
    const auto a = generate_scene(spec);
    const auto b = generate_scene(spec);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].patient_id == b[i].patient_id);
        CHECK(a[i].image == b[i].image);
        CHECK(a[i].mask == b[i].mask);
    }
    spec.seed = 78;
    const auto c = generate_scene(spec);
    CHECK_FALSE(a[0].image == c[0].image);
}

TEST_CASE("tumor_count_range (0,0) gives empty masks") {
    SyntheticSceneSpec spec;
    spec.image_size = 96;
    spec.patient_count = 2;
    spec.tumor_count_range = {0, 0};
    spec.seed = 5;
    for (const auto& scene : generate_scene(spec))
        CHECK(mass_area_ratio(scene.mask) == 0.0);
}

TEST_CASE("single-tumor mask pixel count is within 2% of the ellipse area") {
    SyntheticSceneSpec spec;
    spec.image_size = 256;
    spec.patient_count = 4;
    spec.tumor_count_range = {1, 1};
    spec.tumor_axis_range = {24, 24};  // both semi-axes fixed at 24
    spec.seed = 9;
    for (const auto& scene : generate_scene(spec)) {
        int64_t count = 0;
        for (uint8_t v : scene.mask.labels) count += v;
        const double analytic = 3.14159265358979323846 * 24.0 * 24.0;
        CHECK(std::abs(static_cast<double>(count) - analytic) / analytic < 0.02);
    }
}

TEST_CASE("masks are subsets of the breast region") {
    SyntheticSceneSpec spec;
    spec.image_size = 160;
    spec.patient_count = 6;
    spec.tumor_count_range = {1, 3};
    spec.background_texture = BackgroundTexture::speckle;
    spec.seed = 11;
    for (const auto& scene : generate_scene(spec))
        for (size_t i = 0; i < scene.mask.labels.size(); ++i)
            if (scene.mask.labels[i])  // tumor pixels sit on bright tissue, never background
                CHECK(scene.image.data[i] > 0.3);
}

TEST_CASE("extraction on generated scenes has zero shortfall when tumors exist") {
    SyntheticSceneSpec spec;
    spec.image_size = 256;
    spec.patient_count = 3;
    spec.tumor_count_range = {1, 2};
    spec.tumor_axis_range = {12, 20};
    spec.seed = 13;

    // Full-scale extraction defaults scaled to the image size (1024 -> size/4).
    ExtractionParams params;
    params.patch_size = spec.image_size / 4;
    for (const auto& scene : generate_scene(spec)) {
        const auto result =
            extract_patches(scene.image, scene.mask, params, 21, scene.patient_id, scene.image_id);
        CHECK(result.shortfall_total() == 0);
        CHECK(result.patches.size() == 80);
    }
}

TEST_CASE("spec validation") {
    SyntheticSceneSpec spec;
    spec.image_size = 64;
    spec.tumor_axis_range = {12, 40};  // axes must stay below image_size / 2
    CHECK_THROWS_AS(generate_scene(spec), ArgumentError);
    spec.tumor_axis_range = {6, 10};
    spec.contrast_gap = 0.0;
    CHECK_THROWS_AS(generate_scene(spec), ArgumentError);
}
