#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "lupi/kern/kernels.hpp"

// Reference kernel bodies, shared with the AVX2 translation unit as the
// fallback for shapes its vector paths do not cover (stride != 1).

namespace lupi::kern::scalar_impl {

template <class T>
void pad_input(const Conv2dDims& d, const T* in, int64_t n, std::vector<T>& padded) {
    const int64_t hp = d.h_in + 2 * d.pad;
    const int64_t wp = d.w_in + 2 * d.pad;
    std::fill(padded.begin(), padded.end(), T(0));
    for (int64_t c = 0; c < d.c_in; ++c) {
        const T* src = in + ((n * d.c_in + c) * d.h_in) * d.w_in;
        T* dst = padded.data() + c * hp * wp + d.pad * wp + d.pad;
        for (int64_t y = 0; y < d.h_in; ++y)
            std::copy(src + y * d.w_in, src + (y + 1) * d.w_in, dst + y * wp);
    }
}

template <class T>
void conv2d_forward(const Conv2dDims& d, const T* in, const T* w, const T* bias, T* out) {
    const int64_t ho = d.h_out(), wo = d.w_out();
    const int64_t hp = d.h_in + 2 * d.pad;
    const int64_t wp = d.w_in + 2 * d.pad;
    std::vector<T> padded(static_cast<size_t>(d.c_in * hp * wp));
    for (int64_t n = 0; n < d.n; ++n) {
        pad_input(d, in, n, padded);
        for (int64_t f = 0; f < d.c_out; ++f) {
            T* out_plane = out + ((n * d.c_out + f) * ho) * wo;
            std::fill(out_plane, out_plane + ho * wo, bias ? bias[f] : T(0));
            for (int64_t c = 0; c < d.c_in; ++c) {
                const T* in_plane = padded.data() + c * hp * wp;
                for (int64_t ky = 0; ky < d.k; ++ky)
                    for (int64_t kx = 0; kx < d.k; ++kx) {
                        const T wv = w[((f * d.c_in + c) * d.k + ky) * d.k + kx];
                        for (int64_t y = 0; y < ho; ++y) {
                            const T* src = in_plane + (y * d.stride + ky) * wp + kx;
                            T* dst = out_plane + y * wo;
                            if (d.stride == 1) {
                                for (int64_t x = 0; x < wo; ++x) dst[x] += wv * src[x];
                            } else {
                                for (int64_t x = 0; x < wo; ++x) dst[x] += wv * src[x * d.stride];
                            }
                        }
                    }
            }
        }
    }
}

template <class T>
void conv2d_backward_input(const Conv2dDims& d, const T* w, const T* gout, T* gin) {
    const int64_t ho = d.h_out(), wo = d.w_out();
    const int64_t hp = d.h_in + 2 * d.pad;
    const int64_t wp = d.w_in + 2 * d.pad;
    std::vector<T> gpadded(static_cast<size_t>(d.c_in * hp * wp));
    for (int64_t n = 0; n < d.n; ++n) {
        std::fill(gpadded.begin(), gpadded.end(), T(0));
        for (int64_t f = 0; f < d.c_out; ++f) {
            const T* gout_plane = gout + ((n * d.c_out + f) * ho) * wo;
            for (int64_t c = 0; c < d.c_in; ++c) {
                T* gin_plane = gpadded.data() + c * hp * wp;
                for (int64_t ky = 0; ky < d.k; ++ky)
                    for (int64_t kx = 0; kx < d.k; ++kx) {
                        const T wv = w[((f * d.c_in + c) * d.k + ky) * d.k + kx];
                        for (int64_t y = 0; y < ho; ++y) {
                            T* dst = gin_plane + (y * d.stride + ky) * wp + kx;
                            const T* src = gout_plane + y * wo;
                            if (d.stride == 1) {
                                for (int64_t x = 0; x < wo; ++x) dst[x] += wv * src[x];
                            } else {
                                for (int64_t x = 0; x < wo; ++x) dst[x * d.stride] += wv * src[x];
                            }
                        }
                    }
            }
        }
        for (int64_t c = 0; c < d.c_in; ++c) {
            const T* src = gpadded.data() + c * hp * wp + d.pad * wp + d.pad;
            T* dst = gin + ((n * d.c_in + c) * d.h_in) * d.w_in;
            for (int64_t y = 0; y < d.h_in; ++y)
                for (int64_t x = 0; x < d.w_in; ++x) dst[y * d.w_in + x] += src[y * wp + x];
        }
    }
}

template <class T>
void conv2d_backward_params(const Conv2dDims& d, const T* in, const T* gout, T* gw, T* gbias) {
    const int64_t ho = d.h_out(), wo = d.w_out();
    const int64_t hp = d.h_in + 2 * d.pad;
    const int64_t wp = d.w_in + 2 * d.pad;
    std::vector<T> padded(static_cast<size_t>(d.c_in * hp * wp));
    for (int64_t n = 0; n < d.n; ++n) {
        pad_input(d, in, n, padded);
        for (int64_t f = 0; f < d.c_out; ++f) {
            const T* gout_plane = gout + ((n * d.c_out + f) * ho) * wo;
            if (gbias) {
                T acc = 0;
                for (int64_t i = 0; i < ho * wo; ++i) acc += gout_plane[i];
                gbias[f] += acc;
            }
            for (int64_t c = 0; c < d.c_in; ++c) {
                const T* in_plane = padded.data() + c * hp * wp;
                for (int64_t ky = 0; ky < d.k; ++ky)
                    for (int64_t kx = 0; kx < d.k; ++kx) {
                        T acc = 0;
                        for (int64_t y = 0; y < ho; ++y) {
                            const T* src = in_plane + (y * d.stride + ky) * wp + kx;
                            const T* g = gout_plane + y * wo;
                            if (d.stride == 1) {
                                for (int64_t x = 0; x < wo; ++x) acc += src[x] * g[x];
                            } else {
                                for (int64_t x = 0; x < wo; ++x) acc += src[x * d.stride] * g[x];
                            }
                        }
                        gw[((f * d.c_in + c) * d.k + ky) * d.k + kx] += acc;
                    }
            }
        }
    }
}

template <class T>
void relu_forward(const T* x, T* y, int64_t len) {
    for (int64_t i = 0; i < len; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <class T>
void relu_backward(const T* x, const T* gy, T* gx, int64_t len) {
    for (int64_t i = 0; i < len; ++i)
        if (x[i] > T(0)) gx[i] += gy[i];
}

template <class T>
void axpy(T a, const T* x, T* y, int64_t len) {
    for (int64_t i = 0; i < len; ++i) y[i] += a * x[i];
}

template <class T>
void bn_channel_stats(const T* x, int64_t n, int64_t c, int64_t hw, T* mean, T* var) {
    const int64_t m = n * hw;
    for (int64_t ch = 0; ch < c; ++ch) {
        T sum = 0;
        for (int64_t b = 0; b < n; ++b) {
            const T* p = x + (b * c + ch) * hw;
            for (int64_t i = 0; i < hw; ++i) sum += p[i];
        }
        const T mu = sum / static_cast<T>(m);
        T sq = 0;
        for (int64_t b = 0; b < n; ++b) {
            const T* p = x + (b * c + ch) * hw;
            for (int64_t i = 0; i < hw; ++i) {
                const T dlt = p[i] - mu;
                sq += dlt * dlt;
            }
        }
        mean[ch] = mu;
        var[ch] = sq / static_cast<T>(m);
    }
}

template <class T>
void bn_apply(const T* x, int64_t n, int64_t c, int64_t hw, const T* mean, const T* inv_std,
              const T* gamma, const T* beta, T* y) {
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch) {
            const T* src = x + (b * c + ch) * hw;
            T* dst = y + (b * c + ch) * hw;
            const T mu = mean[ch], is = inv_std[ch], g = gamma[ch], bt = beta[ch];
            for (int64_t i = 0; i < hw; ++i) dst[i] = (src[i] - mu) * is * g + bt;
        }
}

template <class T>
void bn_backward_train(const T* x, const T* gy, int64_t n, int64_t c, int64_t hw, const T* mean,
                       const T* inv_std, const T* gamma, T* gx, T* ggamma, T* gbeta) {
    const int64_t m = n * hw;
    for (int64_t ch = 0; ch < c; ++ch) {
        const T mu = mean[ch], is = inv_std[ch];
        T s1 = 0;  // sum gy
        T s2 = 0;  // sum gy * xhat
        for (int64_t b = 0; b < n; ++b) {
            const T* px = x + (b * c + ch) * hw;
            const T* pg = gy + (b * c + ch) * hw;
            for (int64_t i = 0; i < hw; ++i) {
                s1 += pg[i];
                s2 += pg[i] * (px[i] - mu) * is;
            }
        }
        const T g = gamma[ch];
        const T inv_m = T(1) / static_cast<T>(m);
        for (int64_t b = 0; b < n; ++b) {
            const T* px = x + (b * c + ch) * hw;
            const T* pg = gy + (b * c + ch) * hw;
            T* pgx = gx + (b * c + ch) * hw;
            for (int64_t i = 0; i < hw; ++i) {
                const T xhat = (px[i] - mu) * is;
                pgx[i] += g * is * (pg[i] - s1 * inv_m - xhat * s2 * inv_m);
            }
        }
        ggamma[ch] += s2;
        gbeta[ch] += s1;
    }
}

template <class T>
void adam_step(T* param, T* m, T* v, const T* g, int64_t len, T lr, T beta1, T beta2, T eps,
               int64_t t) {
    const T bc1 = T(1) / (T(1) - std::pow(beta1, static_cast<T>(t)));
    const T bc2 = T(1) / (T(1) - std::pow(beta2, static_cast<T>(t)));
    for (int64_t i = 0; i < len; ++i) {
        m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
        v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
        param[i] -= lr * (m[i] * bc1) / (std::sqrt(v[i] * bc2) + eps);
    }
}

template <class T>
void sgd_momentum_step(T* param, T* vel, const T* g, int64_t len, T lr, T momentum) {
    for (int64_t i = 0; i < len; ++i) {
        vel[i] = momentum * vel[i] + g[i];
        param[i] -= lr * vel[i];
    }
}

}  // namespace lupi::kern::scalar_impl
