#include "lupi/metrics.hpp"

#include <cmath>

#include <boost/math/distributions/students_t.hpp>

namespace lupi {
namespace {

struct Confusion {
    int64_t tp = 0, fp = 0, fn = 0;

    double f1() const {
        const int64_t denom = 2 * tp + fp + fn;
        if (denom == 0) return 1.0;
        return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    }
};

Confusion count_pair(const MaskImage& pred, const MaskImage& truth) {
    if (pred.width != truth.width || pred.height != truth.height)
        throw ArgumentError("f1_score: mask dimension mismatch");
    Confusion c;
    for (size_t i = 0; i < pred.labels.size(); ++i) {
        const bool p = pred.labels[i] != 0;
        const bool t = truth.labels[i] != 0;
        c.tp += p && t;
        c.fp += p && !t;
        c.fn += !p && t;
    }
    return c;
}

void check_sets(std::span<const MaskImage> pred, std::span<const MaskImage> truth) {
    if (pred.size() != truth.size())
        throw ArgumentError("f1_score: prediction/truth set sizes differ");
    if (pred.empty()) throw ArgumentError("f1_score: empty mask sets");
}

}  // namespace

double f1_score(std::span<const MaskImage> pred, std::span<const MaskImage> truth) {
    check_sets(pred, truth);
    Confusion total;
    for (size_t i = 0; i < pred.size(); ++i) {
        const Confusion c = count_pair(pred[i], truth[i]);
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn += c.fn;
    }
    return total.f1();
}

double f1_score_macro(std::span<const MaskImage> pred, std::span<const MaskImage> truth) {
    check_sets(pred, truth);
    double sum = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) sum += count_pair(pred[i], truth[i]).f1();
    return sum / static_cast<double>(pred.size());
}

ConfidenceInterval confidence_interval_95(std::span<const double> samples) {
    const size_t n = samples.size();
    if (n < 2) throw ArgumentError("confidence_interval_95: need at least 2 samples");
    double mean = 0.0;
    for (double v : samples) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    const double stddev = std::sqrt(ss / static_cast<double>(n - 1));

    const boost::math::students_t dist(static_cast<double>(n - 1));
    const double t = boost::math::quantile(dist, 0.975);
    return {mean, t * stddev / std::sqrt(static_cast<double>(n))};
}

}  // namespace lupi
