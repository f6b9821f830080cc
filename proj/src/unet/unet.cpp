#include "lupi/unet.hpp"

#include <cmath>

#include "lupi/rng.hpp"

namespace lupi {
namespace {

using nn::BnMode;
using nn::BnStats;
using nn::make_node;
using nn::NodePtr;
using nn::Shape;
using nn::Tape;

template <class T>
NodePtr<T> param(Shape shape) {
    return make_node<T>(std::move(shape), /*requires_grad=*/true);
}

template <class T>
void he_init(const NodePtr<T>& w, int64_t fan_in, Rng rng) {
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : w->value) v = static_cast<T>(rng.gaussian() * std_dev);
}

template <class T>
ConvBnLayer<T> make_conv_bn(int64_t c_in, int64_t c_out, int64_t k, const Rng& root,
                            const std::string& name) {
    ConvBnLayer<T> layer;
    layer.w = param<T>({c_out, c_in, k, k});
    layer.b = param<T>({c_out});
    layer.gamma = param<T>({c_out});
    layer.beta = param<T>({c_out});
    layer.bn = BnStats<T>(c_out);
    he_init(layer.w, c_in * k * k, root.child(name + ".w"));
    std::fill(layer.gamma->value.begin(), layer.gamma->value.end(), T(1));
    return layer;
}

template <class T>
TConvLayer<T> make_tconv(int64_t c_in, int64_t c_out, const Rng& root, const std::string& name) {
    TConvLayer<T> layer;
    layer.w = param<T>({c_in, c_out, 2, 2});
    layer.b = param<T>({c_out});
    he_init(layer.w, c_in * 4, root.child(name + ".w"));
    return layer;
}

template <class T>
NodePtr<T> conv_bn_relu(Tape<T>* tape, const NodePtr<T>& x, ConvBnLayer<T>& layer, BnMode mode) {
    auto y = nn::conv2d(tape, x, layer.w, layer.b, UNetConfig::padding);
    y = nn::batch_norm(tape, y, layer.gamma, layer.beta, layer.bn, mode);
    return nn::relu(tape, y);
}

template <class T>
void push_layer(std::vector<std::pair<std::string, NodePtr<T>>>& out, const std::string& name,
                ConvBnLayer<T>& layer) {
    out.emplace_back(name + ".w", layer.w);
    out.emplace_back(name + ".b", layer.b);
    out.emplace_back(name + ".gamma", layer.gamma);
    out.emplace_back(name + ".beta", layer.beta);
}

}  // namespace

template <class T>
UNetModel<T> UNetModel<T>::init(const UNetConfig& config, uint64_t seed) {
    config.validate();
    const Rng root(seed);
    const int64_t w = config.base_width;
    const int64_t k = UNetConfig::kernel;

    UNetModel<T> m;
    m.config = config;
    m.c1a = make_conv_bn<T>(config.in_channels, w, k, root, "c1a");
    m.c1b = make_conv_bn<T>(w, w, k, root, "c1b");
    m.c2a = make_conv_bn<T>(w, 2 * w, k, root, "c2a");
    m.c2b = make_conv_bn<T>(2 * w, 2 * w, k, root, "c2b");
    m.c3a = make_conv_bn<T>(2 * w, 4 * w, k, root, "c3a");
    m.c3b = make_conv_bn<T>(4 * w, 4 * w, k, root, "c3b");
    m.up1 = make_tconv<T>(4 * w, 4 * w, root, "up1");
    m.e1a = make_conv_bn<T>(8 * w, 4 * w, k, root, "e1a");
    m.e1b = make_conv_bn<T>(4 * w, 4 * w, k, root, "e1b");
    m.up2 = make_tconv<T>(4 * w, 2 * w, root, "up2");
    m.e2a = make_conv_bn<T>(4 * w, 2 * w, k, root, "e2a");
    m.e2b = make_conv_bn<T>(2 * w, 2 * w, k, root, "e2b");
    m.up3 = make_tconv<T>(2 * w, w, root, "up3");
    m.e3a = make_conv_bn<T>(2 * w, w, k, root, "e3a");
    m.e3b = make_conv_bn<T>(w, w, k, root, "e3b");
    m.head_w = param<T>({UNetConfig::class_count, w, 1, 1});
    m.head_b = param<T>({UNetConfig::class_count});
    he_init(m.head_w, w, root.child("head.w"));
    return m;
}

template <class T>
NodePtr<T> UNetModel<T>::forward(Tape<T>* tape, const NodePtr<T>& input, BnMode mode) {
    if (input->shape.size() != 4) throw ArgumentError("unet forward: expected NCHW input");
    if (input->dim(1) != config.in_channels)
        throw ArgumentError("unet forward: model expects " + std::to_string(config.in_channels) +
                            " input channel(s), got " + std::to_string(input->dim(1)));
    if (input->dim(2) % 8 != 0 || input->dim(3) % 8 != 0)
        throw ArgumentError("unet forward: spatial dims must be divisible by 8");

    auto s1 = conv_bn_relu(tape, conv_bn_relu(tape, input, c1a, mode), c1b, mode);
    auto p1 = nn::max_pool2d(tape, s1);
    auto s2 = conv_bn_relu(tape, conv_bn_relu(tape, p1, c2a, mode), c2b, mode);
    auto p2 = nn::max_pool2d(tape, s2);
    auto s3 = conv_bn_relu(tape, conv_bn_relu(tape, p2, c3a, mode), c3b, mode);
    auto p3 = nn::max_pool2d(tape, s3);

    auto u1 = nn::transposed_conv2d(tape, p3, up1.w, up1.b);
    auto e1 = conv_bn_relu(tape, conv_bn_relu(tape, nn::concat_channels(tape, u1, s3), e1a, mode),
                           e1b, mode);
    auto u2 = nn::transposed_conv2d(tape, e1, up2.w, up2.b);
    auto e2 = conv_bn_relu(tape, conv_bn_relu(tape, nn::concat_channels(tape, u2, s2), e2a, mode),
                           e2b, mode);
    auto u3 = nn::transposed_conv2d(tape, e2, up3.w, up3.b);
    auto e3 = conv_bn_relu(tape, conv_bn_relu(tape, nn::concat_channels(tape, u3, s1), e3a, mode),
                           e3b, mode);

    auto logits = nn::conv2d(tape, e3, head_w, head_b, /*padding=*/0);
    return nn::softmax_channels(tape, logits);
}

template <class T>
std::vector<std::pair<std::string, NodePtr<T>>> UNetModel<T>::parameters() {
    std::vector<std::pair<std::string, NodePtr<T>>> out;
    push_layer(out, "c1a", c1a);
    push_layer(out, "c1b", c1b);
    push_layer(out, "c2a", c2a);
    push_layer(out, "c2b", c2b);
    push_layer(out, "c3a", c3a);
    push_layer(out, "c3b", c3b);
    out.emplace_back("up1.w", up1.w);
    out.emplace_back("up1.b", up1.b);
    push_layer(out, "e1a", e1a);
    push_layer(out, "e1b", e1b);
    out.emplace_back("up2.w", up2.w);
    out.emplace_back("up2.b", up2.b);
    push_layer(out, "e2a", e2a);
    push_layer(out, "e2b", e2b);
    out.emplace_back("up3.w", up3.w);
    out.emplace_back("up3.b", up3.b);
    push_layer(out, "e3a", e3a);
    push_layer(out, "e3b", e3b);
    out.emplace_back("head.w", head_w);
    out.emplace_back("head.b", head_b);
    return out;
}

template <class T>
std::vector<std::pair<std::string, std::vector<T>*>> UNetModel<T>::stat_buffers() {
    std::vector<std::pair<std::string, std::vector<T>*>> out;
    auto push = [&out](const std::string& name, ConvBnLayer<T>& layer) {
        out.emplace_back(name + ".bn.mean", &layer.bn.running_mean);
        out.emplace_back(name + ".bn.var", &layer.bn.running_var);
    };
    push("c1a", c1a);
    push("c1b", c1b);
    push("c2a", c2a);
    push("c2b", c2b);
    push("c3a", c3a);
    push("c3b", c3b);
    push("e1a", e1a);
    push("e1b", e1b);
    push("e2a", e2a);
    push("e2b", e2b);
    push("e3a", e3a);
    push("e3b", e3b);
    return out;
}

template <class T>
std::vector<std::pair<std::string, Shape>> UNetModel<T>::expected_shapes(const UNetConfig& c) {
    c.validate();
    const int64_t w = c.base_width;
    const int64_t k = UNetConfig::kernel;
    std::vector<std::pair<std::string, Shape>> out;
    auto conv_bn = [&](const std::string& name, int64_t ci, int64_t co) {
        out.emplace_back(name + ".w", Shape{co, ci, k, k});
        out.emplace_back(name + ".b", Shape{co});
        out.emplace_back(name + ".gamma", Shape{co});
        out.emplace_back(name + ".beta", Shape{co});
    };
    conv_bn("c1a", c.in_channels, w);
    conv_bn("c1b", w, w);
    conv_bn("c2a", w, 2 * w);
    conv_bn("c2b", 2 * w, 2 * w);
    conv_bn("c3a", 2 * w, 4 * w);
    conv_bn("c3b", 4 * w, 4 * w);
    out.emplace_back("up1.w", Shape{4 * w, 4 * w, 2, 2});
    out.emplace_back("up1.b", Shape{4 * w});
    conv_bn("e1a", 8 * w, 4 * w);
    conv_bn("e1b", 4 * w, 4 * w);
    out.emplace_back("up2.w", Shape{4 * w, 2 * w, 2, 2});
    out.emplace_back("up2.b", Shape{2 * w});
    conv_bn("e2a", 4 * w, 2 * w);
    conv_bn("e2b", 2 * w, 2 * w);
    out.emplace_back("up3.w", Shape{2 * w, w, 2, 2});
    out.emplace_back("up3.b", Shape{w});
    conv_bn("e3a", 2 * w, w);
    conv_bn("e3b", w, w);
    out.emplace_back("head.w", Shape{UNetConfig::class_count, w, 1, 1});
    out.emplace_back("head.b", Shape{UNetConfig::class_count});
    return out;
}

template <class T>
void UNetModel<T>::save(const std::filesystem::path& path) const {
    nn::Checkpoint<T> ckpt;
    nn::ModelHeader header;
    header.in_channels = static_cast<int32_t>(config.in_channels);
    header.base_width = static_cast<int32_t>(config.base_width);
    header.depth = static_cast<int32_t>(UNetConfig::depth);
    header.class_count = static_cast<int32_t>(UNetConfig::class_count);
    ckpt.model = header;
    auto* self = const_cast<UNetModel<T>*>(this);  // parameters() is logically const
    for (auto& [name, node] : self->parameters())
        ckpt.entries.push_back({name, node->shape, node->value});
    for (auto& [name, buf] : self->stat_buffers())
        ckpt.entries.push_back({name, Shape{static_cast<int64_t>(buf->size())}, *buf});
    nn::write_checkpoint(path, ckpt);
}

template <class T>
UNetModel<T> UNetModel<T>::load(const std::filesystem::path& path) {
    const auto ckpt = nn::read_checkpoint<T>(path);
    if (!ckpt.model) throw FormatError(path.string() + ": checkpoint has no model header");
    UNetConfig config;
    config.in_channels = ckpt.model->in_channels;
    config.base_width = ckpt.model->base_width;
    if (ckpt.model->depth != UNetConfig::depth ||
        ckpt.model->class_count != UNetConfig::class_count)
        throw FormatError(path.string() + ": incompatible model topology");

    UNetModel<T> m = UNetModel<T>::init(config, /*seed=*/0);
    for (auto& [name, node] : m.parameters()) {
        const auto& entry = ckpt.find(name);
        if (entry.shape != node->shape)
            throw FormatError(path.string() + ": shape mismatch for '" + name + "'");
        node->value = entry.values;
    }
    for (auto& [name, buf] : m.stat_buffers()) {
        const auto& entry = ckpt.find(name);
        if (entry.values.size() != buf->size())
            throw FormatError(path.string() + ": shape mismatch for '" + name + "'");
        *buf = entry.values;
    }
    return m;
}

template <class T>
uint64_t UNetModel<T>::parameter_hash() const {
    auto* self = const_cast<UNetModel<T>*>(this);
    uint64_t h = 0xcbf29ce484222325ull;
    for (auto& [name, node] : self->parameters()) {
        h = fnv1a64(name, h);
        h = fnv1a64_bytes(node->value.data(), node->value.size() * sizeof(T), h);
    }
    return h;
}

nn::CheckpointInfo inspect_model_file(const std::filesystem::path& path) {
    return nn::inspect_checkpoint(path);
}

template class UNetModel<float>;
template class UNetModel<double>;

}  // namespace lupi
