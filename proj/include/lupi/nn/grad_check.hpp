#pragma once

#include <functional>
#include <span>

#include "lupi/nn/tensor.hpp"

namespace lupi::nn {

struct GradCheckOptions {
    double step = 1e-5;
    // 0 checks every coordinate; otherwise a deterministic random sample of
    // this many coordinates per tensor (used for large compositions).
    int max_coords_per_tensor = 0;
    uint64_t seed = 1234;
    // A coordinate whose second difference exceeds this fraction of the
    // gradient scale straddles a non-smooth point (ReLU kink, pool tie); it
    // is retried with a smaller step and skipped if still flagged.
    double kink_threshold = 1e-4;
};

// Compares reverse-mode gradients of a deterministic scalar function against
// central finite differences (f(x+h) - f(x-h)) / 2h and returns the worst
// relative error, with relative defined against max(|ad|, |fd|, 1e-4).
// The callable must rebuild its forward pass on every invocation; it is run
// with a null tape for the difference evaluations. Throws NumericError if a
// non-finite value shows up or if more than a quarter of the checked
// coordinates land on non-smooth points.
double grad_check(const std::function<NodePtr<double>(Tape<double>*)>& fn,
                  std::span<const NodePtr<double>> inputs, const GradCheckOptions& opts = {});

}  // namespace lupi::nn
