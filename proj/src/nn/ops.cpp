#include "lupi/nn/ops.hpp"

#include <cmath>
#include <cstring>

#include "lupi/kern/kernels.hpp"

namespace lupi::nn {
namespace {

template <class T>
void require_4d(const NodePtr<T>& x, const char* who) {
    if (x->shape.size() != 4) throw ArgumentError(std::string(who) + ": expected a 4-d tensor");
}

template <class T>
bool any_requires_grad(std::initializer_list<NodePtr<T>> nodes) {
    for (const auto& n : nodes)
        if (n && n->requires_grad) return true;
    return false;
}

}  // namespace

template <class T>
NodePtr<T> conv2d(Tape<T>* tape, const NodePtr<T>& input, const NodePtr<T>& weights,
                  const NodePtr<T>& bias, int64_t padding, int64_t stride) {
    require_4d(input, "conv2d input");
    require_4d(weights, "conv2d weights");
    if (padding < 0 || stride < 1) throw ArgumentError("conv2d: bad padding/stride");
    kern::Conv2dDims d;
    d.n = input->dim(0);
    d.c_in = input->dim(1);
    d.h_in = input->dim(2);
    d.w_in = input->dim(3);
    d.c_out = weights->dim(0);
    d.k = weights->dim(2);
    d.pad = padding;
    d.stride = stride;
    if (weights->dim(1) != d.c_in) throw ArgumentError("conv2d: channel mismatch");
    if (weights->dim(3) != d.k) throw ArgumentError("conv2d: kernel must be square");
    if (d.k > d.h_in + 2 * d.pad || d.k > d.w_in + 2 * d.pad)
        throw ArgumentError("conv2d: kernel larger than padded input");
    if (bias->size() != d.c_out) throw ArgumentError("conv2d: bias size mismatch");

    auto out = make_node<T>({d.n, d.c_out, d.h_out(), d.w_out()});
    kern::active<T>().conv2d_forward(d, input->value.data(), weights->value.data(),
                                     bias->value.data(), out->value.data());
    out->requires_grad = tape && any_requires_grad<T>({input, weights, bias});

    if (out->requires_grad) {
        typename Tape<T>::Step step;
        step.name = "conv2d";
        step.output = out;
        step.inputs = {input, weights, bias};
        step.backward = [input, weights, bias, out, d] {
            const auto& k = kern::active<T>();
            if (input->requires_grad)
                k.conv2d_backward_input(d, weights->value.data(), out->grad.data(),
                                        input->grad.data());
            if (weights->requires_grad || bias->requires_grad)
                k.conv2d_backward_params(d, input->value.data(), out->grad.data(),
                                         weights->grad.data(),
                                         bias->requires_grad ? bias->grad.data() : nullptr);
        };
        tape->record(std::move(step));
    }
    return out;
}

template <class T>
NodePtr<T> batch_norm(Tape<T>* tape, const NodePtr<T>& input, const NodePtr<T>& gamma,
                      const NodePtr<T>& beta, BnStats<T>& stats, BnMode mode, T momentum,
                      T epsilon) {
    require_4d(input, "batch_norm input");
    const int64_t n = input->dim(0), c = input->dim(1);
    const int64_t hw = input->dim(2) * input->dim(3);
    if (gamma->size() != c || beta->size() != c)
        throw ArgumentError("batch_norm: gamma/beta size mismatch");
    if (static_cast<int64_t>(stats.running_mean.size()) != c)
        throw ArgumentError("batch_norm: running stats size mismatch");
    const int64_t m = n * hw;
    if (mode == BnMode::train && m < 2)
        throw NumericError("batch_norm: degenerate variance (fewer than 2 elements per channel)");

    const auto& k = kern::active<T>();
    auto mean = std::make_shared<std::vector<T>>(static_cast<size_t>(c));
    auto inv_std = std::make_shared<std::vector<T>>(static_cast<size_t>(c));

    if (mode == BnMode::train) {
        std::vector<T> var(static_cast<size_t>(c));
        k.bn_channel_stats(input->value.data(), n, c, hw, mean->data(), var.data());
        for (int64_t ch = 0; ch < c; ++ch) {
            (*inv_std)[ch] = T(1) / std::sqrt(var[ch] + epsilon);
            const T unbiased = var[ch] * static_cast<T>(m) / static_cast<T>(m - 1);
            stats.running_mean[ch] = (T(1) - momentum) * stats.running_mean[ch] +
                                     momentum * (*mean)[ch];
            stats.running_var[ch] = (T(1) - momentum) * stats.running_var[ch] +
                                    momentum * unbiased;
        }
    } else {
        for (int64_t ch = 0; ch < c; ++ch) {
            (*mean)[ch] = stats.running_mean[ch];
            (*inv_std)[ch] = T(1) / std::sqrt(stats.running_var[ch] + epsilon);
        }
    }

    auto out = make_node<T>(input->shape);
    k.bn_apply(input->value.data(), n, c, hw, mean->data(), inv_std->data(),
               gamma->value.data(), beta->value.data(), out->value.data());
    out->requires_grad = tape && any_requires_grad<T>({input, gamma, beta});

    if (out->requires_grad) {
        typename Tape<T>::Step step;
        step.name = "batch_norm";
        step.output = out;
        step.inputs = {input, gamma, beta};
        step.backward = [input, gamma, beta, out, mean, inv_std, n, c, hw, mode] {
            if (mode == BnMode::train) {
                kern::active<T>().bn_backward_train(
                    input->value.data(), out->grad.data(), n, c, hw, mean->data(),
                    inv_std->data(), gamma->value.data(), input->grad.data(),
                    gamma->grad.data(), beta->grad.data());
            } else {
                // Running stats are constants here, so the map is affine.
                for (int64_t b = 0; b < n; ++b)
                    for (int64_t ch = 0; ch < c; ++ch) {
                        const T mu = (*mean)[ch], is = (*inv_std)[ch];
                        const T g = gamma->value[static_cast<size_t>(ch)];
                        const size_t base = static_cast<size_t>((b * c + ch) * hw);
                        T s1 = 0, s2 = 0;
                        for (int64_t i = 0; i < hw; ++i) {
                            const T gy = out->grad[base + static_cast<size_t>(i)];
                            s1 += gy;
                            s2 += gy * (input->value[base + static_cast<size_t>(i)] - mu) * is;
                            if (input->requires_grad)
                                input->grad[base + static_cast<size_t>(i)] += gy * g * is;
                        }
                        if (gamma->requires_grad) gamma->grad[static_cast<size_t>(ch)] += s2;
                        if (beta->requires_grad) beta->grad[static_cast<size_t>(ch)] += s1;
                    }
            }
        };
        tape->record(std::move(step));
    }
    return out;
}

template <class T>
NodePtr<T> relu(Tape<T>* tape, const NodePtr<T>& input) {
    auto out = make_node<T>(input->shape);
    kern::active<T>().relu_forward(input->value.data(), out->value.data(), input->size());
    out->requires_grad = tape && input->requires_grad;
    if (out->requires_grad) {
        typename Tape<T>::Step step;
        step.name = "relu";
        step.output = out;
        step.inputs = {input};
        step.backward = [input, out] {
            kern::active<T>().relu_backward(input->value.data(), out->grad.data(),
                                            input->grad.data(), input->size());
        };
        tape->record(std::move(step));
    }
    return out;
}

template <class T>
NodePtr<T> max_pool2d(Tape<T>* tape, const NodePtr<T>& input) {
    require_4d(input, "max_pool2d input");
    const int64_t n = input->dim(0), c = input->dim(1), h = input->dim(2), w = input->dim(3);
    if (h % 2 != 0 || w % 2 != 0)
        throw ArgumentError("max_pool2d: spatial dims must be even");
    const int64_t ho = h / 2, wo = w / 2;
    auto out = make_node<T>({n, c, ho, wo});
    auto argmax = std::make_shared<std::vector<int64_t>>(out->value.size());

    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch) {
            const T* plane = input->value.data() + (b * c + ch) * h * w;
            T* dst = out->value.data() + (b * c + ch) * ho * wo;
            int64_t* am = argmax->data() + (b * c + ch) * ho * wo;
            for (int64_t y = 0; y < ho; ++y)
                for (int64_t x = 0; x < wo; ++x) {
                    const int64_t base = (2 * y) * w + 2 * x;
                    int64_t best = base;
                    T best_v = plane[base];
                    const int64_t cands[3] = {base + 1, base + w, base + w + 1};
                    for (int64_t cand : cands)
                        if (plane[cand] > best_v) {  // ties keep the first (row-major) hit
                            best_v = plane[cand];
                            best = cand;
                        }
                    dst[y * wo + x] = best_v;
                    am[y * wo + x] = (b * c + ch) * h * w + best;
                }
        }

    out->requires_grad = tape && input->requires_grad;
    if (out->requires_grad) {
        typename Tape<T>::Step step;
        step.name = "max_pool2d";
        step.output = out;
        step.inputs = {input};
        step.backward = [input, out, argmax] {
            for (size_t i = 0; i < out->grad.size(); ++i)
                input->grad[static_cast<size_t>((*argmax)[i])] += out->grad[i];
        };
        tape->record(std::move(step));
    }
    return out;
}

template <class T>
NodePtr<T> transposed_conv2d(Tape<T>* tape, const NodePtr<T>& input, const NodePtr<T>& weights,
                             const NodePtr<T>& bias) {
    require_4d(input, "transposed_conv2d input");
    require_4d(weights, "transposed_conv2d weights");
    const int64_t n = input->dim(0), c = input->dim(1), h = input->dim(2), w = input->dim(3);
    const int64_t f = weights->dim(1);
    if (weights->dim(0) != c) throw ArgumentError("transposed_conv2d: channel mismatch");
    if (weights->dim(2) != 2 || weights->dim(3) != 2)
        throw ArgumentError("transposed_conv2d: kernel must be 2x2");
    if (bias->size() != f) throw ArgumentError("transposed_conv2d: bias size mismatch");

    const int64_t ho = 2 * h, wo = 2 * w;
    auto out = make_node<T>({n, f, ho, wo});
    for (int64_t b = 0; b < n; ++b)
        for (int64_t fo = 0; fo < f; ++fo) {
            T* dst = out->value.data() + (b * f + fo) * ho * wo;
            std::fill(dst, dst + ho * wo, bias->value[static_cast<size_t>(fo)]);
            for (int64_t ci = 0; ci < c; ++ci) {
                const T* src = input->value.data() + (b * c + ci) * h * w;
                const T* wk = weights->value.data() + (ci * f + fo) * 4;
                for (int64_t y = 0; y < h; ++y)
                    for (int64_t x = 0; x < w; ++x) {
                        const T v = src[y * w + x];
                        T* o = dst + (2 * y) * wo + 2 * x;
                        o[0] += v * wk[0];
                        o[1] += v * wk[1];
                        o[wo] += v * wk[2];
                        o[wo + 1] += v * wk[3];
                    }
            }
        }

    out->requires_grad = tape && any_requires_grad<T>({input, weights, bias});
    if (out->requires_grad) {
        typename Tape<T>::Step step;
        step.name = "transposed_conv2d";
        step.output = out;
        step.inputs = {input, weights, bias};
        step.backward = [input, weights, bias, out, n, c, f, h, w, ho, wo] {
            for (int64_t b = 0; b < n; ++b)
                for (int64_t fo = 0; fo < f; ++fo) {
                    const T* gy = out->grad.data() + (b * f + fo) * ho * wo;
                    if (bias->requires_grad) {
                        T acc = 0;
                        for (int64_t i = 0; i < ho * wo; ++i) acc += gy[i];
                        bias->grad[static_cast<size_t>(fo)] += acc;
                    }
                    for (int64_t ci = 0; ci < c; ++ci) {
                        const T* src = input->value.data() + (b * c + ci) * h * w;
                        const T* wk = weights->value.data() + (ci * f + fo) * 4;
                        T* gx = input->requires_grad
                                    ? input->grad.data() + (b * c + ci) * h * w
                                    : nullptr;
                        T* gw = weights->requires_grad
                                    ? weights->grad.data() + (ci * f + fo) * 4
                                    : nullptr;
                        for (int64_t y = 0; y < h; ++y)
                            for (int64_t x = 0; x < w; ++x) {
                                const T* g = gy + (2 * y) * wo + 2 * x;
                                if (gx)
                                    gx[y * w + x] += g[0] * wk[0] + g[1] * wk[1] +
                                                     g[wo] * wk[2] + g[wo + 1] * wk[3];
                                if (gw) {
                                    const T v = src[y * w + x];
                                    gw[0] += v * g[0];
                                    gw[1] += v * g[1];
                                    gw[2] += v * g[wo];
                                    gw[3] += v * g[wo + 1];
                                }
                            }
                    }
                }
        };
        tape->record(std::move(step));
    }
    return out;
}

template <class T>
NodePtr<T> concat_channels(Tape<T>* tape, const NodePtr<T>& a, const NodePtr<T>& b) {
    require_4d(a, "concat_channels");
    require_4d(b, "concat_channels");
    if (a->dim(0) != b->dim(0) || a->dim(2) != b->dim(2) || a->dim(3) != b->dim(3))
        throw ArgumentError("concat_channels: non-channel dims must match");
    const int64_t n = a->dim(0), ca = a->dim(1), cb = b->dim(1);
    const int64_t hw = a->dim(2) * a->dim(3);
    auto out = make_node<T>({n, ca + cb, a->dim(2), a->dim(3)});
    for (int64_t bn = 0; bn < n; ++bn) {
        std::memcpy(out->value.data() + bn * (ca + cb) * hw, a->value.data() + bn * ca * hw,
                    sizeof(T) * static_cast<size_t>(ca * hw));
        std::memcpy(out->value.data() + (bn * (ca + cb) + ca) * hw,
                    b->value.data() + bn * cb * hw, sizeof(T) * static_cast<size_t>(cb * hw));
    }
    out->requires_grad = tape && any_requires_grad<T>({a, b});
    if (out->requires_grad) {
        typename Tape<T>::Step step;
        step.name = "concat_channels";
        step.output = out;
        step.inputs = {a, b};
        step.backward = [a, b, out, n, ca, cb, hw] {
            const auto& k = kern::active<T>();
            for (int64_t bn = 0; bn < n; ++bn) {
                if (a->requires_grad)
                    k.axpy(T(1), out->grad.data() + bn * (ca + cb) * hw,
                           a->grad.data() + bn * ca * hw, ca * hw);
                if (b->requires_grad)
                    k.axpy(T(1), out->grad.data() + (bn * (ca + cb) + ca) * hw,
                           b->grad.data() + bn * cb * hw, cb * hw);
            }
        };
        tape->record(std::move(step));
    }
    return out;
}

template <class T>
NodePtr<T> softmax_channels(Tape<T>* tape, const NodePtr<T>& input) {
    require_4d(input, "softmax_channels");
    const int64_t n = input->dim(0), c = input->dim(1);
    const int64_t hw = input->dim(2) * input->dim(3);
    auto out = make_node<T>(input->shape);
    for (int64_t b = 0; b < n; ++b)
        for (int64_t i = 0; i < hw; ++i) {
            T mx = input->value[static_cast<size_t>(b * c * hw + i)];
            for (int64_t ch = 1; ch < c; ++ch)
                mx = std::max(mx, input->value[static_cast<size_t>((b * c + ch) * hw + i)]);
            T denom = 0;
            for (int64_t ch = 0; ch < c; ++ch) {
                const T e = std::exp(input->value[static_cast<size_t>((b * c + ch) * hw + i)] - mx);
                out->value[static_cast<size_t>((b * c + ch) * hw + i)] = e;
                denom += e;
            }
            const T inv = T(1) / denom;
            for (int64_t ch = 0; ch < c; ++ch)
                out->value[static_cast<size_t>((b * c + ch) * hw + i)] *= inv;
        }
    out->requires_grad = tape && input->requires_grad;
    if (out->requires_grad) {
        typename Tape<T>::Step step;
        step.name = "softmax_channels";
        step.output = out;
        step.inputs = {input};
        step.backward = [input, out, n, c, hw] {
            for (int64_t b = 0; b < n; ++b)
                for (int64_t i = 0; i < hw; ++i) {
                    T dot = 0;
                    for (int64_t ch = 0; ch < c; ++ch) {
                        const size_t idx = static_cast<size_t>((b * c + ch) * hw + i);
                        dot += out->grad[idx] * out->value[idx];
                    }
                    for (int64_t ch = 0; ch < c; ++ch) {
                        const size_t idx = static_cast<size_t>((b * c + ch) * hw + i);
                        input->grad[idx] += out->value[idx] * (out->grad[idx] - dot);
                    }
                }
        };
        tape->record(std::move(step));
    }
    return out;
}

template <class T>
NodePtr<T> cross_entropy(Tape<T>* tape, const NodePtr<T>& pred_probs, const NodePtr<T>& target) {
    require_4d(pred_probs, "cross_entropy pred");
    require_4d(target, "cross_entropy target");
    if (pred_probs->shape != target->shape)
        throw ArgumentError("cross_entropy: shape mismatch");
    if (pred_probs->dim(1) != 2)
        throw ArgumentError("cross_entropy: class axis must have size 2");
    const int64_t n = pred_probs->dim(0), c = 2;
    const int64_t hw = pred_probs->dim(2) * pred_probs->dim(3);

    for (int64_t b = 0; b < n; ++b)
        for (int64_t i = 0; i < hw; ++i) {
            T sum = 0;
            for (int64_t ch = 0; ch < c; ++ch)
                sum += target->value[static_cast<size_t>((b * c + ch) * hw + i)];
            if (std::abs(sum - T(1)) > T(1e-3))
                throw ArgumentError("cross_entropy: target rows must sum to 1 over classes");
        }

    const T floor = T(kProbFloor);
    const T scale = T(1) / static_cast<T>(n * hw);
    T acc = 0;
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch) {
            const size_t base = static_cast<size_t>((b * c + ch) * hw);
            for (int64_t i = 0; i < hw; ++i) {
                const T t = target->value[base + static_cast<size_t>(i)];
                const T p = std::max(pred_probs->value[base + static_cast<size_t>(i)], floor);
                acc -= t * std::log(p);
            }
        }
    auto out = make_node<T>({1});
    out->value[0] = acc * scale;
    out->requires_grad = tape && pred_probs->requires_grad;

    if (out->requires_grad) {
        typename Tape<T>::Step step;
        step.name = "cross_entropy";
        step.output = out;
        step.inputs = {pred_probs};
        step.backward = [pred_probs, target, out, n, c, hw, floor, scale] {
            const T g = out->grad[0] * scale;
            for (int64_t b = 0; b < n; ++b)
                for (int64_t ch = 0; ch < c; ++ch) {
                    const size_t base = static_cast<size_t>((b * c + ch) * hw);
                    for (int64_t i = 0; i < hw; ++i) {
                        const T p = pred_probs->value[base + static_cast<size_t>(i)];
                        if (p < floor) continue;  // clamped region is flat
                        const T t = target->value[base + static_cast<size_t>(i)];
                        pred_probs->grad[base + static_cast<size_t>(i)] -= g * t / p;
                    }
                }
        };
        tape->record(std::move(step));
    }
    return out;
}

template <class T>
NodePtr<T> add_scaled(Tape<T>* tape, const NodePtr<T>& a, T ca, const NodePtr<T>& b, T cb) {
    if (a->size() != 1 || b->size() != 1)
        throw ArgumentError("add_scaled: operands must be scalar");
    auto out = make_node<T>({1});
    if (cb == T(0))
        out->value[0] = ca == T(1) ? a->value[0] : ca * a->value[0];
    else if (ca == T(0))
        out->value[0] = cb == T(1) ? b->value[0] : cb * b->value[0];
    else
        out->value[0] = ca * a->value[0] + cb * b->value[0];

    const bool use_a = ca != T(0) && a->requires_grad;
    const bool use_b = cb != T(0) && b->requires_grad;
    out->requires_grad = tape && (use_a || use_b);
    if (out->requires_grad) {
        typename Tape<T>::Step step;
        step.name = "add_scaled";
        step.output = out;
        if (use_a) step.inputs.push_back(a);
        if (use_b) step.inputs.push_back(b);
        step.backward = [a, b, ca, cb, out, use_a, use_b] {
            if (use_a) a->grad[0] += ca * out->grad[0];
            if (use_b) b->grad[0] += cb * out->grad[0];
        };
        tape->record(std::move(step));
    }
    return out;
}

#define LUPI_INSTANTIATE_OPS(T)                                                               \
    template NodePtr<T> conv2d<T>(Tape<T>*, const NodePtr<T>&, const NodePtr<T>&,             \
                                  const NodePtr<T>&, int64_t, int64_t);                       \
    template NodePtr<T> batch_norm<T>(Tape<T>*, const NodePtr<T>&, const NodePtr<T>&,         \
                                      const NodePtr<T>&, BnStats<T>&, BnMode, T, T);          \
    template NodePtr<T> relu<T>(Tape<T>*, const NodePtr<T>&);                                 \
    template NodePtr<T> max_pool2d<T>(Tape<T>*, const NodePtr<T>&);                           \
    template NodePtr<T> transposed_conv2d<T>(Tape<T>*, const NodePtr<T>&, const NodePtr<T>&,  \
                                             const NodePtr<T>&);                              \
    template NodePtr<T> concat_channels<T>(Tape<T>*, const NodePtr<T>&, const NodePtr<T>&);   \
    template NodePtr<T> softmax_channels<T>(Tape<T>*, const NodePtr<T>&);                     \
    template NodePtr<T> cross_entropy<T>(Tape<T>*, const NodePtr<T>&, const NodePtr<T>&);     \
    template NodePtr<T> add_scaled<T>(Tape<T>*, const NodePtr<T>&, T, const NodePtr<T>&, T);

LUPI_INSTANTIATE_OPS(float)
LUPI_INSTANTIATE_OPS(double)

}  // namespace lupi::nn
