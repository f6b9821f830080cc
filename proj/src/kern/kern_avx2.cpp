// AVX2+FMA kernel variants. Compiled with -mavx2 -mfma on x86_64 only; the
// dispatcher selects them at runtime after a CPU feature check. Inner loops
// vectorize along the contiguous W axis with scalar tails; reductions keep a
// fixed lane order so results are deterministic per backend.

#include "lupi/kern/kernels.hpp"

#if defined(LUPI_KERN_AVX2)

#include <immintrin.h>

#include "scalar_impl.hpp"

namespace lupi::kern::avx2 {
namespace {

template <class T>
struct V;

template <>
struct V<float> {
    using reg = __m256;
    static constexpr int64_t width = 8;
    static reg loadu(const float* p) { return _mm256_loadu_ps(p); }
    static void storeu(float* p, reg v) { _mm256_storeu_ps(p, v); }
    static reg set1(float v) { return _mm256_set1_ps(v); }
    static reg zero() { return _mm256_setzero_ps(); }
    static reg add(reg a, reg b) { return _mm256_add_ps(a, b); }
    static reg sub(reg a, reg b) { return _mm256_sub_ps(a, b); }
    static reg mul(reg a, reg b) { return _mm256_mul_ps(a, b); }
    static reg div(reg a, reg b) { return _mm256_div_ps(a, b); }
    static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_ps(a, b, c); }
    static reg fnmadd(reg a, reg b, reg c) { return _mm256_fnmadd_ps(a, b, c); }
    static reg max(reg a, reg b) { return _mm256_max_ps(a, b); }
    static reg sqrt(reg a) { return _mm256_sqrt_ps(a); }
    static reg gt_mask(reg a, reg b) { return _mm256_cmp_ps(a, b, _CMP_GT_OQ); }
    static reg and_(reg a, reg b) { return _mm256_and_ps(a, b); }
    static float hsum(reg v) {
        __m128 lo = _mm256_castps256_ps128(v);
        __m128 hi = _mm256_extractf128_ps(v, 1);
        lo = _mm_add_ps(lo, hi);
        __m128 shuf = _mm_movehdup_ps(lo);
        __m128 sums = _mm_add_ps(lo, shuf);
        shuf = _mm_movehl_ps(shuf, sums);
        sums = _mm_add_ss(sums, shuf);
        return _mm_cvtss_f32(sums);
    }
};

template <>
struct V<double> {
    using reg = __m256d;
    static constexpr int64_t width = 4;
    static reg loadu(const double* p) { return _mm256_loadu_pd(p); }
    static void storeu(double* p, reg v) { _mm256_storeu_pd(p, v); }
    static reg set1(double v) { return _mm256_set1_pd(v); }
    static reg zero() { return _mm256_setzero_pd(); }
    static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
    static reg sub(reg a, reg b) { return _mm256_sub_pd(a, b); }
    static reg mul(reg a, reg b) { return _mm256_mul_pd(a, b); }
    static reg div(reg a, reg b) { return _mm256_div_pd(a, b); }
    static reg fmadd(reg a, reg b, reg c) { return _mm256_fmadd_pd(a, b, c); }
    static reg fnmadd(reg a, reg b, reg c) { return _mm256_fnmadd_pd(a, b, c); }
    static reg max(reg a, reg b) { return _mm256_max_pd(a, b); }
    static reg sqrt(reg a) { return _mm256_sqrt_pd(a); }
    static reg gt_mask(reg a, reg b) { return _mm256_cmp_pd(a, b, _CMP_GT_OQ); }
    static reg and_(reg a, reg b) { return _mm256_and_pd(a, b); }
    static double hsum(reg v) {
        __m128d lo = _mm256_castpd256_pd128(v);
        __m128d hi = _mm256_extractf128_pd(v, 1);
        lo = _mm_add_pd(lo, hi);
        __m128d hi64 = _mm_unpackhi_pd(lo, lo);
        return _mm_cvtsd_f64(_mm_add_sd(lo, hi64));
    }
};

// y[0..len) += a * x[0..len)
template <class T>
void axpy_rows(T a, const T* x, T* y, int64_t len) {
    using W = V<T>;
    const auto va = W::set1(a);
    int64_t i = 0;
    for (; i + W::width <= len; i += W::width)
        W::storeu(y + i, W::fmadd(va, W::loadu(x + i), W::loadu(y + i)));
    for (; i < len; ++i) y[i] += a * x[i];
}

template <class T>
T dot_row(const T* a, const T* b, int64_t len, typename V<T>::reg& vacc) {
    using W = V<T>;
    int64_t i = 0;
    for (; i + W::width <= len; i += W::width)
        vacc = W::fmadd(W::loadu(a + i), W::loadu(b + i), vacc);
    T tail = 0;
    for (; i < len; ++i) tail += a[i] * b[i];
    return tail;
}

template <class T>
void conv2d_forward(const Conv2dDims& d, const T* in, const T* w, const T* bias, T* out) {
    if (d.stride != 1) {
        scalar_impl::conv2d_forward<T>(d, in, w, bias, out);
        return;
    }
    const int64_t ho = d.h_out(), wo = d.w_out();
    const int64_t hp = d.h_in + 2 * d.pad;
    const int64_t wp = d.w_in + 2 * d.pad;
    std::vector<T> padded(static_cast<size_t>(d.c_in * hp * wp));
    for (int64_t n = 0; n < d.n; ++n) {
        scalar_impl::pad_input(d, in, n, padded);
        for (int64_t f = 0; f < d.c_out; ++f) {
            T* out_plane = out + ((n * d.c_out + f) * ho) * wo;
            std::fill(out_plane, out_plane + ho * wo, bias ? bias[f] : T(0));
            for (int64_t c = 0; c < d.c_in; ++c) {
                const T* in_plane = padded.data() + c * hp * wp;
                for (int64_t ky = 0; ky < d.k; ++ky)
                    for (int64_t kx = 0; kx < d.k; ++kx) {
                        const T wv = w[((f * d.c_in + c) * d.k + ky) * d.k + kx];
                        for (int64_t y = 0; y < ho; ++y)
                            axpy_rows(wv, in_plane + (y + ky) * wp + kx, out_plane + y * wo, wo);
                    }
            }
        }
    }
}

template <class T>
void conv2d_backward_input(const Conv2dDims& d, const T* w, const T* gout, T* gin) {
    if (d.stride != 1) {
        scalar_impl::conv2d_backward_input<T>(d, w, gout, gin);
        return;
    }
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
                        for (int64_t y = 0; y < ho; ++y)
                            axpy_rows(wv, gout_plane + y * wo, gin_plane + (y + ky) * wp + kx, wo);
                    }
            }
        }
        for (int64_t c = 0; c < d.c_in; ++c) {
            const T* src = gpadded.data() + c * hp * wp + d.pad * wp + d.pad;
            T* dst = gin + ((n * d.c_in + c) * d.h_in) * d.w_in;
            for (int64_t y = 0; y < d.h_in; ++y)
                axpy_rows(T(1), src + y * wp, dst + y * d.w_in, d.w_in);
        }
    }
}

template <class T>
void conv2d_backward_params(const Conv2dDims& d, const T* in, const T* gout, T* gw, T* gbias) {
    if (d.stride != 1) {
        scalar_impl::conv2d_backward_params<T>(d, in, gout, gw, gbias);
        return;
    }
    using W = V<T>;
    const int64_t ho = d.h_out(), wo = d.w_out();
    const int64_t hp = d.h_in + 2 * d.pad;
    const int64_t wp = d.w_in + 2 * d.pad;
    std::vector<T> padded(static_cast<size_t>(d.c_in * hp * wp));
    for (int64_t n = 0; n < d.n; ++n) {
        scalar_impl::pad_input(d, in, n, padded);
        for (int64_t f = 0; f < d.c_out; ++f) {
            const T* gout_plane = gout + ((n * d.c_out + f) * ho) * wo;
            if (gbias) {
                auto vacc = W::zero();
                T tail = 0;
                int64_t i = 0;
                const int64_t len = ho * wo;
                for (; i + W::width <= len; i += W::width)
                    vacc = W::add(vacc, W::loadu(gout_plane + i));
                for (; i < len; ++i) tail += gout_plane[i];
                gbias[f] += W::hsum(vacc) + tail;
            }
            for (int64_t c = 0; c < d.c_in; ++c) {
                const T* in_plane = padded.data() + c * hp * wp;
                for (int64_t ky = 0; ky < d.k; ++ky)
                    for (int64_t kx = 0; kx < d.k; ++kx) {
                        auto vacc = W::zero();
                        T tail = 0;
                        for (int64_t y = 0; y < ho; ++y)
                            tail += dot_row(in_plane + (y + ky) * wp + kx, gout_plane + y * wo,
                                            wo, vacc);
                        gw[((f * d.c_in + c) * d.k + ky) * d.k + kx] += W::hsum(vacc) + tail;
                    }
            }
        }
    }
}

template <class T>
void relu_forward(const T* x, T* y, int64_t len) {
    using W = V<T>;
    const auto vz = W::zero();
    int64_t i = 0;
    for (; i + W::width <= len; i += W::width) W::storeu(y + i, W::max(W::loadu(x + i), vz));
    for (; i < len; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <class T>
void relu_backward(const T* x, const T* gy, T* gx, int64_t len) {
    using W = V<T>;
    const auto vz = W::zero();
    int64_t i = 0;
    for (; i + W::width <= len; i += W::width) {
        const auto mask = W::gt_mask(W::loadu(x + i), vz);
        W::storeu(gx + i, W::add(W::loadu(gx + i), W::and_(mask, W::loadu(gy + i))));
    }
    for (; i < len; ++i)
        if (x[i] > T(0)) gx[i] += gy[i];
}

template <class T>
void axpy(T a, const T* x, T* y, int64_t len) {
    axpy_rows(a, x, y, len);
}

template <class T>
void bn_channel_stats(const T* x, int64_t n, int64_t c, int64_t hw, T* mean, T* var) {
    using W = V<T>;
    const int64_t m = n * hw;
    for (int64_t ch = 0; ch < c; ++ch) {
        auto vacc = W::zero();
        T tail = 0;
        for (int64_t b = 0; b < n; ++b) {
            const T* p = x + (b * c + ch) * hw;
            int64_t i = 0;
            for (; i + W::width <= hw; i += W::width) vacc = W::add(vacc, W::loadu(p + i));
            for (; i < hw; ++i) tail += p[i];
        }
        const T mu = (W::hsum(vacc) + tail) / static_cast<T>(m);
        const auto vmu = W::set1(mu);
        auto vsq = W::zero();
        T tail_sq = 0;
        for (int64_t b = 0; b < n; ++b) {
            const T* p = x + (b * c + ch) * hw;
            int64_t i = 0;
            for (; i + W::width <= hw; i += W::width) {
                const auto dlt = W::sub(W::loadu(p + i), vmu);
                vsq = W::fmadd(dlt, dlt, vsq);
            }
            for (; i < hw; ++i) {
                const T dlt = p[i] - mu;
                tail_sq += dlt * dlt;
            }
        }
        mean[ch] = mu;
        var[ch] = (W::hsum(vsq) + tail_sq) / static_cast<T>(m);
    }
}

template <class T>
void bn_apply(const T* x, int64_t n, int64_t c, int64_t hw, const T* mean, const T* inv_std,
              const T* gamma, const T* beta, T* y) {
    using W = V<T>;
    for (int64_t b = 0; b < n; ++b)
        for (int64_t ch = 0; ch < c; ++ch) {
            const T* src = x + (b * c + ch) * hw;
            T* dst = y + (b * c + ch) * hw;
            const T a = inv_std[ch] * gamma[ch];
            const T mu = mean[ch], bt = beta[ch];
            const auto va = W::set1(a), vmu = W::set1(mu), vbt = W::set1(bt);
            int64_t i = 0;
            for (; i + W::width <= hw; i += W::width)
                W::storeu(dst + i, W::fmadd(W::sub(W::loadu(src + i), vmu), va, vbt));
            for (; i < hw; ++i) dst[i] = (src[i] - mu) * a + bt;
        }
}

template <class T>
void bn_backward_train(const T* x, const T* gy, int64_t n, int64_t c, int64_t hw, const T* mean,
                       const T* inv_std, const T* gamma, T* gx, T* ggamma, T* gbeta) {
    using W = V<T>;
    const int64_t m = n * hw;
    for (int64_t ch = 0; ch < c; ++ch) {
        const T mu = mean[ch], is = inv_std[ch];
        const auto vmu = W::set1(mu), vis = W::set1(is);
        auto v1 = W::zero(), v2 = W::zero();
        T t1 = 0, t2 = 0;
        for (int64_t b = 0; b < n; ++b) {
            const T* px = x + (b * c + ch) * hw;
            const T* pg = gy + (b * c + ch) * hw;
            int64_t i = 0;
            for (; i + W::width <= hw; i += W::width) {
                const auto g = W::loadu(pg + i);
                v1 = W::add(v1, g);
                v2 = W::fmadd(g, W::mul(W::sub(W::loadu(px + i), vmu), vis), v2);
            }
            for (; i < hw; ++i) {
                t1 += pg[i];
                t2 += pg[i] * (px[i] - mu) * is;
            }
        }
        const T s1 = W::hsum(v1) + t1;
        const T s2 = W::hsum(v2) + t2;
        const T g = gamma[ch];
        const T inv_m = T(1) / static_cast<T>(m);
        const T a = g * is, b1 = s1 * inv_m, b2 = s2 * inv_m;
        const auto va = W::set1(a), vb1 = W::set1(b1), vb2 = W::set1(b2);
        for (int64_t b = 0; b < n; ++b) {
            const T* px = x + (b * c + ch) * hw;
            const T* pg = gy + (b * c + ch) * hw;
            T* pgx = gx + (b * c + ch) * hw;
            int64_t i = 0;
            for (; i + W::width <= hw; i += W::width) {
                const auto xhat = W::mul(W::sub(W::loadu(px + i), vmu), vis);
                const auto inner = W::fnmadd(vb2, xhat, W::sub(W::loadu(pg + i), vb1));
                W::storeu(pgx + i, W::fmadd(va, inner, W::loadu(pgx + i)));
            }
            for (; i < hw; ++i) {
                const T xhat = (px[i] - mu) * is;
                pgx[i] += a * (pg[i] - b1 - xhat * b2);
            }
        }
        ggamma[ch] += s2;
        gbeta[ch] += s1;
    }
}

template <class T>
void adam_step(T* param, T* m, T* v, const T* g, int64_t len, T lr, T beta1, T beta2, T eps,
               int64_t t) {
    using W = V<T>;
    const T bc1 = T(1) / (T(1) - std::pow(beta1, static_cast<T>(t)));
    const T bc2 = T(1) / (T(1) - std::pow(beta2, static_cast<T>(t)));
    const auto vb1 = W::set1(beta1), vnb1 = W::set1(T(1) - beta1);
    const auto vb2 = W::set1(beta2), vnb2 = W::set1(T(1) - beta2);
    const auto vlr1 = W::set1(lr * bc1), vbc2 = W::set1(bc2), veps = W::set1(eps);
    int64_t i = 0;
    for (; i + W::width <= len; i += W::width) {
        const auto vg = W::loadu(g + i);
        const auto vm = W::fmadd(vb1, W::loadu(m + i), W::mul(vnb1, vg));
        const auto vv = W::fmadd(vb2, W::loadu(v + i), W::mul(vnb2, W::mul(vg, vg)));
        W::storeu(m + i, vm);
        W::storeu(v + i, vv);
        const auto denom = W::add(W::sqrt(W::mul(vv, vbc2)), veps);
        W::storeu(param + i, W::sub(W::loadu(param + i), W::div(W::mul(vlr1, vm), denom)));
    }
    for (; i < len; ++i) {
        m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
        v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
        param[i] -= lr * bc1 * m[i] / (std::sqrt(v[i] * bc2) + eps);
    }
}

template <class T>
void sgd_momentum_step(T* param, T* vel, const T* g, int64_t len, T lr, T momentum) {
    using W = V<T>;
    const auto vmom = W::set1(momentum), vlr = W::set1(lr);
    int64_t i = 0;
    for (; i + W::width <= len; i += W::width) {
        const auto v = W::fmadd(vmom, W::loadu(vel + i), W::loadu(g + i));
        W::storeu(vel + i, v);
        W::storeu(param + i, W::fnmadd(vlr, v, W::loadu(param + i)));
    }
    for (; i < len; ++i) {
        vel[i] = momentum * vel[i] + g[i];
        param[i] -= lr * vel[i];
    }
}

}  // namespace

bool compiled_in() { return true; }

template <class T>
void fill_table(Kernels<T>& k) {
    k.conv2d_forward = conv2d_forward<T>;
    k.conv2d_backward_input = conv2d_backward_input<T>;
    k.conv2d_backward_params = conv2d_backward_params<T>;
    k.relu_forward = relu_forward<T>;
    k.relu_backward = relu_backward<T>;
    k.axpy = axpy<T>;
    k.bn_channel_stats = bn_channel_stats<T>;
    k.bn_apply = bn_apply<T>;
    k.bn_backward_train = bn_backward_train<T>;
    k.adam_step = adam_step<T>;
    k.sgd_momentum_step = sgd_momentum_step<T>;
}

template void fill_table<float>(Kernels<float>&);
template void fill_table<double>(Kernels<double>&);

}  // namespace lupi::kern::avx2

#else  // !LUPI_KERN_AVX2

namespace lupi::kern::avx2 {

bool compiled_in() { return false; }

template <class T>
void fill_table(Kernels<T>&) {}

template void fill_table<float>(Kernels<float>&);
template void fill_table<double>(Kernels<double>&);

}  // namespace lupi::kern::avx2

#endif
