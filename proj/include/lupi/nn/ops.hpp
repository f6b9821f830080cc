#pragma once

#include "lupi/nn/tensor.hpp"

namespace lupi::nn {

// Operator set expressing the segmentation network and both losses. Every op
// validates shapes (ArgumentError on mismatch), computes its value through
// the dispatched kernels, and — when a tape is supplied and an input requires
// gradients — records a backward step. Passing tape = nullptr runs the op in
// pure inference mode (used for the frozen teacher).

enum class BnMode { train, eval };

template <class T>
struct BnStats {
    std::vector<T> running_mean;
    std::vector<T> running_var;  // unbiased

    explicit BnStats(int64_t channels = 0)
        : running_mean(static_cast<size_t>(channels), T(0)),
          running_var(static_cast<size_t>(channels), T(1)) {}
};

inline constexpr double kProbFloor = 1e-12;  // cross_entropy clamp
inline constexpr double kBnMomentum = 0.1;
inline constexpr double kBnEpsilon = 1e-5;

template <class T>
NodePtr<T> conv2d(Tape<T>* tape, const NodePtr<T>& input, const NodePtr<T>& weights,
                  const NodePtr<T>& bias, int64_t padding, int64_t stride = 1);

template <class T>
NodePtr<T> batch_norm(Tape<T>* tape, const NodePtr<T>& input, const NodePtr<T>& gamma,
                      const NodePtr<T>& beta, BnStats<T>& stats, BnMode mode,
                      T momentum = T(kBnMomentum), T epsilon = T(kBnEpsilon));

template <class T>
NodePtr<T> relu(Tape<T>* tape, const NodePtr<T>& input);

// 2x2 window, stride 2. Spatial dims must be even.
template <class T>
NodePtr<T> max_pool2d(Tape<T>* tape, const NodePtr<T>& input);

// Kernel 2, stride 2: exact 2x upsampling. Weights are [C_in, C_out, 2, 2].
template <class T>
NodePtr<T> transposed_conv2d(Tape<T>* tape, const NodePtr<T>& input, const NodePtr<T>& weights,
                             const NodePtr<T>& bias);

template <class T>
NodePtr<T> concat_channels(Tape<T>* tape, const NodePtr<T>& a, const NodePtr<T>& b);

template <class T>
NodePtr<T> softmax_channels(Tape<T>* tape, const NodePtr<T>& input);

// Mean cross-entropy over all pixels; class axis must have size 2. target may
// be hard one-hot or soft probabilities (rows must sum to 1). Gradients flow
// into pred_probs only.
template <class T>
NodePtr<T> cross_entropy(Tape<T>* tape, const NodePtr<T>& pred_probs, const NodePtr<T>& target);

// ca*a + cb*b for scalar nodes. A branch with an exactly-zero coefficient is
// dropped from the value and from the recorded dependencies.
template <class T>
NodePtr<T> add_scaled(Tape<T>* tape, const NodePtr<T>& a, T ca, const NodePtr<T>& b, T cb);

}  // namespace lupi::nn
