#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lupi/metrics.hpp"
#include "test_util.hpp"

using namespace lupi;

namespace {

// Independent confusion-count oracle.
double oracle_f1(std::span<const MaskImage> pred, std::span<const MaskImage> truth) {
    int64_t tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < pred.size(); ++i)
        for (size_t j = 0; j < pred[i].labels.size(); ++j) {
            const int p = pred[i].labels[j] ? 1 : 0;
            const int t = truth[i].labels[j] ? 1 : 0;
            if (p == 1 && t == 1) ++tp;
            if (p == 1 && t == 0) ++fp;
            if (p == 0 && t == 1) ++fn;
        }
    const int64_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

MaskImage mask_of(std::vector<uint8_t> labels, int w, int h) {
    MaskImage m;
    m.width = w;
    m.height = h;
    m.labels = std::move(labels);
    return m;
}

}  // namespace

TEST_CASE("f1_score spec examples") {
    MaskImage tumor = mask_of({1, 1, 0, 0}, 2, 2);
    std::vector<MaskImage> pred{tumor}, truth{tumor};
    CHECK(f1_score(pred, truth) == doctest::Approx(1.0));

    std::vector<MaskImage> none{mask_of({0, 0, 0, 0}, 2, 2)};
    std::vector<MaskImage> all{mask_of({1, 1, 1, 1}, 2, 2)};
    CHECK(f1_score(none, all) == doctest::Approx(0.0));

    // TP=3, FP=1, FN=2 -> 6/9.
    MaskImage p4 = mask_of({1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}, 4, 4);
    MaskImage t4 = mask_of({1, 1, 1, 0, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}, 4, 4);
    std::vector<MaskImage> pv{p4}, tv{t4};
    CHECK(f1_score(pv, tv) == doctest::Approx(6.0 / 9.0).epsilon(1e-12));

    // Empty prediction and truth agree perfectly.
    std::vector<MaskImage> e1{mask_of({0, 0, 0, 0}, 2, 2)}, e2{mask_of({0, 0, 0, 0}, 2, 2)};
    CHECK(f1_score(e1, e2) == doctest::Approx(1.0));

    std::vector<MaskImage> small{mask_of({0}, 1, 1)};
    CHECK_THROWS_AS(f1_score(pv, small), ArgumentError);
}

TEST_CASE("f1_score equals the confusion oracle on 1000 random 16x16 pairs") {
    Rng rng(61);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<MaskImage> pred{test::random_mask(16, 16, rng, rng.uniform(0.0, 1.0))};
        std::vector<MaskImage> truth{test::random_mask(16, 16, rng, rng.uniform(0.0, 1.0))};
        CHECK(f1_score(pred, truth) == oracle_f1(pred, truth));
    }
}

TEST_CASE("f1_score micro-aggregation is permutation invariant") {
    Rng rng(62);
    std::vector<MaskImage> pred, truth;
    for (int i = 0; i < 8; ++i) {
        pred.push_back(test::random_mask(12, 12, rng));
        truth.push_back(test::random_mask(12, 12, rng));
    }
    const double base = f1_score(pred, truth);
    std::vector<size_t> perm{5, 2, 7, 0, 3, 6, 1, 4};
    std::vector<MaskImage> pred_p, truth_p;
    for (size_t i : perm) {
        pred_p.push_back(pred[i]);
        truth_p.push_back(truth[i]);
    }
    CHECK(f1_score(pred_p, truth_p) == base);
}

TEST_CASE("macro aggregation averages per-patch scores") {
    std::vector<MaskImage> pred{mask_of({1, 1, 1, 1}, 2, 2), mask_of({0, 0, 0, 0}, 2, 2)};
    std::vector<MaskImage> truth{mask_of({1, 1, 1, 1}, 2, 2), mask_of({1, 1, 1, 1}, 2, 2)};
    CHECK(f1_score_macro(pred, truth) == doctest::Approx(0.5));
}

TEST_CASE("confidence_interval_95 spec examples") {
    std::vector<double> same{0.6, 0.6, 0.6};
    const auto zero = confidence_interval_95(same);
    CHECK(zero.mean == doctest::Approx(0.6));
    CHECK(zero.half_width == doctest::Approx(0.0));

    // n=2: t(0.975, 1) = 12.7062; s = 0.1414..., s/sqrt(2) = 0.1.
    std::vector<double> two{0.5, 0.7};
    const auto ci2 = confidence_interval_95(two);
    CHECK(ci2.mean == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(ci2.half_width == doctest::Approx(12.7062047362 * 0.1).epsilon(1e-6));

    // n=5 uses t(0.975, 4) = 2.7764.
    std::vector<double> five{0.1, 0.2, 0.3, 0.4, 0.5};
    const auto ci5 = confidence_interval_95(five);
    const double s = std::sqrt(0.025);  // sample stddev of the arithmetic sequence
    CHECK(ci5.mean == doctest::Approx(0.3));
    CHECK(ci5.half_width == doctest::Approx(2.7764451052 * s / std::sqrt(5.0)).epsilon(1e-6));

    std::vector<double> one{0.5};
    CHECK_THROWS_AS(confidence_interval_95(one), ArgumentError);
}

TEST_CASE("confidence interval properties: shift invariance, zero iff constant") {
    Rng rng(63);
    std::vector<double> samples;
    for (int i = 0; i < 7; ++i) samples.push_back(rng.uniform());
    const auto base = confidence_interval_95(samples);
    CHECK(base.half_width > 0.0);

    std::vector<double> shifted;
    for (double v : samples) shifted.push_back(v + 0.25);
    const auto sh = confidence_interval_95(shifted);
    CHECK(sh.mean == doctest::Approx(base.mean + 0.25).epsilon(1e-12));
    CHECK(sh.half_width == doctest::Approx(base.half_width).epsilon(1e-12));

    std::vector<double> scaled;
    for (double v : samples) scaled.push_back(3.0 * v);
    CHECK(confidence_interval_95(scaled).half_width ==
          doctest::Approx(3.0 * base.half_width).epsilon(1e-12));
}
