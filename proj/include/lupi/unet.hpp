#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lupi/nn/checkpoint.hpp"
#include "lupi/nn/ops.hpp"
#include "lupi/nn/tensor.hpp"

namespace lupi {

// Three contracting blocks, three expanding blocks. Each block is two
// conv(3x3, pad 1) + batch-norm + ReLU sequences; contracting blocks feed a
// 2x2 max-pool, expanding blocks start from a kernel-2/stride-2 transposed
// convolution whose output is concatenated with the matching contracting
// block's pre-pool activation. Channel widths run (w, 2w, 4w) down and mirror
// back up; a 1x1 convolution to 2 logits plus a channel softmax forms the
// per-pixel class-probability head.
struct UNetConfig {
    int64_t in_channels = 1;  // 1 = student, 3 = teacher
    int64_t base_width = 16;

    static constexpr int64_t depth = 3;
    static constexpr int64_t kernel = 3;
    static constexpr int64_t padding = 1;
    static constexpr int64_t class_count = 2;

    void validate() const {
        if (in_channels != 1 && in_channels != 3)
            throw ArgumentError("UNetConfig: in_channels must be 1 or 3");
        if (base_width < 1) throw ArgumentError("UNetConfig: base_width must be >= 1");
    }

    bool operator==(const UNetConfig&) const = default;
};

template <class T>
struct ConvBnLayer {
    nn::NodePtr<T> w, b, gamma, beta;
    nn::BnStats<T> bn;
};

template <class T>
struct TConvLayer {
    nn::NodePtr<T> w, b;
};

template <class T>
class UNetModel {
public:
    UNetConfig config;

    ConvBnLayer<T> c1a, c1b, c2a, c2b, c3a, c3b;  // contracting
    TConvLayer<T> up1, up2, up3;
    ConvBnLayer<T> e1a, e1b, e2a, e2b, e3a, e3b;  // expanding
    nn::NodePtr<T> head_w, head_b;

    // He fan-in initialization, BN gamma=1 / beta=0; each parameter draws
    // from its own seed stream so equal seeds give identical bytes.
    static UNetModel init(const UNetConfig& config, uint64_t seed);

    // Per-pixel class probabilities, same spatial dims as the input. Input
    // channels must match the config and H, W must be divisible by 8.
    // Train mode updates BN running stats.
    nn::NodePtr<T> forward(nn::Tape<T>* tape, const nn::NodePtr<T>& input, nn::BnMode mode);

    std::vector<std::pair<std::string, nn::NodePtr<T>>> parameters();
    std::vector<std::pair<std::string, std::vector<T>*>> stat_buffers();

    // Expected parameter shapes derived from config alone (the shape audit).
    static std::vector<std::pair<std::string, nn::Shape>> expected_shapes(const UNetConfig& c);

    void save(const std::filesystem::path& path) const;
    static UNetModel load(const std::filesystem::path& path);

    uint64_t parameter_hash() const;  // FNV over parameter bytes, in name order
};

// Reads the self-describing header and dispatches on the stored precision.
nn::CheckpointInfo inspect_model_file(const std::filesystem::path& path);

extern template class UNetModel<float>;
extern template class UNetModel<double>;

}  // namespace lupi
