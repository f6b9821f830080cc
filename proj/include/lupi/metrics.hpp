#pragma once

#include <span>

#include "lupi/image.hpp"

namespace lupi {

// Micro-aggregated F1 on the tumor class: confusion counts pooled over every
// pixel of every mask pair. An empty-vs-empty comparison (2TP+FP+FN = 0)
// scores 1.0.
double f1_score(std::span<const MaskImage> pred, std::span<const MaskImage> truth);

// Per-patch F1 averaged over patches; the sensitivity-analysis alternative.
double f1_score_macro(std::span<const MaskImage> pred, std::span<const MaskImage> truth);

enum class F1Aggregation { micro, macro };

struct ConfidenceInterval {
    double mean = 0.0;
    double half_width = 0.0;
};

// mean +/- t(0.975, n-1) * s / sqrt(n) with the sample standard deviation.
// Requires at least two samples.
ConfidenceInterval confidence_interval_95(std::span<const double> samples);

}  // namespace lupi
