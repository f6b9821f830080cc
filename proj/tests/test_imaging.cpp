#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "lupi/filters.hpp"
#include "lupi/image_io.hpp"
#include "test_util.hpp"

using namespace lupi;

namespace {

// Independent CDF oracle for histogram equalization: recompute the bin
// counts and cumulative mapping from first principles.
GrayImage oracle_equalize(const GrayImage& img) {
    constexpr int bins = 256;
    std::vector<int64_t> hist(bins, 0);
    auto bin_of = [](double v) {
        int b = static_cast<int>(v * bins);
        return b >= bins ? bins - 1 : b;
    };
    for (double v : img.data) hist[static_cast<size_t>(bin_of(v))]++;
    std::vector<double> cdf(bins, 0.0);
    int64_t acc = 0;
    for (int b = 0; b < bins; ++b) {
        acc += hist[static_cast<size_t>(b)];
        cdf[static_cast<size_t>(b)] =
            static_cast<double>(acc) / static_cast<double>(img.pixel_count());
    }
    GrayImage out = img;
    for (double& v : out.data) v = cdf[static_cast<size_t>(bin_of(v))];
    return out;
}

GrayImage image_from(std::vector<double> values, int w, int h, int depth = 8) {
    GrayImage img;
    img.width = w;
    img.height = h;
    img.source_bit_depth = depth;
    img.data = std::move(values);
    return img;
}

}  // namespace

TEST_CASE("gray image load normalizes by bit depth") {
    test::TempDir tmp("imgio");
    {
        GrayImage img = image_from({1.0, 0.0, 128.0 / 255.0, 7.0 / 255.0}, 2, 2, 8);
        save_gray_image(img, tmp.path / "a.pgm");
        auto back = load_gray_image(tmp.path / "a.pgm");
        CHECK(back.source_bit_depth == 8);
        CHECK(back.data[0] == doctest::Approx(1.0));  // pixel 255 -> 1.0
        CHECK(back.data[1] == doctest::Approx(0.0));  // pixel 0 -> 0.0
    }
    {
        GrayImage img = GrayImage::filled(3, 1, 0.0, 16);
        img.data = {32767.0 / 65535.0, 1.0, 0.25};
        save_gray_image(img, tmp.path / "b.png");
        auto back = load_gray_image(tmp.path / "b.png");
        CHECK(back.source_bit_depth == 16);
        CHECK(back.data[0] == doctest::Approx(32767.0 / 65535.0).epsilon(1e-12));
    }
}

TEST_CASE("load/save round-trips bit-exactly at the same depth") {
    test::TempDir tmp("roundtrip");
    Rng rng(11);
    for (int depth : {8, 16}) {
        for (const char* ext : {"pgm", "png"}) {
            const auto img = test::random_image(13, 9, rng, depth);
            const auto path = tmp.path / ("img" + std::to_string(depth) + "." + ext);
            save_gray_image(img, path);
            const auto back = load_gray_image(path);
            REQUIRE(back.data.size() == img.data.size());
            CHECK(back == img);

            // Second encode produces identical bytes.
            const auto path2 = tmp.path / ("img2." + std::string(ext));
            save_gray_image(back, path2);
            std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
            std::string b1((std::istreambuf_iterator<char>(f1)), {});
            std::string b2((std::istreambuf_iterator<char>(f2)), {});
            CHECK(b1 == b2);
        }
    }
}

TEST_CASE("load errors: missing file, bad format, unsupported maxval") {
    test::TempDir tmp("ioerr");
    CHECK_THROWS_AS(load_gray_image(tmp.path / "missing.pgm"), IoError);

    std::ofstream(tmp.path / "junk.pgm") << "P2\n1 1\n255\n0\n";  // ascii PGM unsupported
    CHECK_THROWS_AS(load_gray_image(tmp.path / "junk.pgm"), FormatError);

    std::ofstream(tmp.path / "odd.pgm") << "P5\n1 1\n1023\n\0\0";
    CHECK_THROWS_AS(load_gray_image(tmp.path / "odd.pgm"), FormatError);

    std::ofstream(tmp.path / "naked.png") << "not a png";
    CHECK_THROWS_AS(load_gray_image(tmp.path / "naked.png"), FormatError);
}

TEST_CASE("mask load: any nonzero pixel means tumor") {
    test::TempDir tmp("mask");
    GrayImage img = image_from({0.0, 3.0 / 255.0, 1.0, 0.0}, 2, 2, 8);
    save_gray_image(img, tmp.path / "m.png");
    const auto mask = load_mask_image(tmp.path / "m.png");
    CHECK(mask.labels == std::vector<uint8_t>{0, 1, 1, 0});
}

TEST_CASE("histogram_equalize matches the spec examples") {
    // Constant image -> all ones under the plain CDF map.
    auto constant = GrayImage::filled(4, 4, 0.5);
    auto eq = histogram_equalize(constant);
    for (double v : eq.data) CHECK(v == doctest::Approx(1.0));

    // 2x1 [0, 1] -> [0.5, 1.0].
    auto two = image_from({0.0, 1.0}, 2, 1);
    auto eq2 = histogram_equalize(two);
    CHECK(eq2.data[0] == doctest::Approx(0.5));
    CHECK(eq2.data[1] == doctest::Approx(1.0));
}

TEST_CASE("histogram_equalize: uniform histogram stays within one bin width") {
    // One pixel in every bin -> the CDF map moves nothing by more than 1/256.
    std::vector<double> values;
    for (int b = 0; b < 256; ++b) values.push_back((b + 0.5) / 256.0);
    auto img = image_from(std::move(values), 256, 1);
    auto eq = histogram_equalize(img);
    for (size_t i = 0; i < eq.data.size(); ++i)
        CHECK(std::abs(eq.data[i] - img.data[i]) <= 1.0 / 256.0 + 1e-12);
}

TEST_CASE("histogram_equalize equals the brute-force CDF oracle on random images") {
    Rng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const auto img = test::random_image(17, 11, rng, trial % 2 ? 16 : 8);
        const auto got = histogram_equalize(img);
        const auto want = oracle_equalize(img);
        for (size_t i = 0; i < img.data.size(); ++i)
            CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("histogram_equalize is monotone and range/dimension preserving") {
    Rng rng(43);
    for (int trial = 0; trial < 10; ++trial) {
        const auto img = test::random_image(23, 7, rng);
        const auto eq = histogram_equalize(img);
        REQUIRE(eq.width == img.width);
        REQUIRE(eq.height == img.height);
        for (double v : eq.data) CHECK((v >= 0.0 && v <= 1.0));
        for (size_t i = 0; i < img.data.size(); ++i)
            for (size_t j = 0; j < img.data.size(); j += 7)
                if (img.data[i] <= img.data[j]) CHECK(eq.data[i] <= eq.data[j]);
    }
}

TEST_CASE("adjust_contrast matches the spec examples") {
    // Full-span image with the identity percentiles is unchanged.
    auto span = image_from({0.0, 0.25, 0.5, 0.75, 1.0, 0.1}, 3, 2);
    auto r = adjust_contrast(span, 0.0, 100.0);
    CHECK_FALSE(r.degenerate);
    for (size_t i = 0; i < span.data.size(); ++i)
        CHECK(r.image.data[i] == doctest::Approx(span.data[i]).epsilon(1e-12));

    // Linear map (x - 0.2) / 0.4.
    auto three = image_from({0.2, 0.4, 0.6}, 3, 1);
    auto r3 = adjust_contrast(three, 0.0, 100.0);
    CHECK(r3.image.data[0] == doctest::Approx(0.0));
    CHECK(r3.image.data[1] == doctest::Approx(0.5));
    CHECK(r3.image.data[2] == doctest::Approx(1.0));

    // Constant image degenerates to zeros with the warning flag.
    auto flat = GrayImage::filled(5, 5, 0.7);
    auto rf = adjust_contrast(flat);
    CHECK(rf.degenerate);
    for (double v : rf.image.data) CHECK(v == 0.0);
}

TEST_CASE("adjust_contrast validates percentiles and preserves range") {
    auto img = GrayImage::filled(4, 4, 0.5);
    CHECK_THROWS_AS(adjust_contrast(img, 50.0, 50.0), ArgumentError);
    CHECK_THROWS_AS(adjust_contrast(img, -1.0, 98.0), ArgumentError);
    CHECK_THROWS_AS(adjust_contrast(img, 2.0, 101.0), ArgumentError);

    Rng rng(44);
    for (int trial = 0; trial < 10; ++trial) {
        const auto r = adjust_contrast(test::random_image(19, 13, rng), 2.0, 98.0);
        CHECK(r.image.width == 19);
        CHECK(r.image.height == 13);
        for (double v : r.image.data) CHECK((v >= 0.0 && v <= 1.0));
    }
}
