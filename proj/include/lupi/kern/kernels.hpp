#pragma once

#include <cstdint>
#include <string>

namespace lupi::kern {

// Arithmetic-dense inner loops behind the autodiff ops. Each kernel has a
// scalar reference implementation and an AVX2 variant; the active backend is
// chosen at startup from CPU features (override with set_backend() or the
// LUPISEG_KERNELS=scalar|avx2 environment variable). Equivalence between
// backends is covered by tests/test_kernels.cpp.
//
// Conventions:
//   - layouts are NCHW, rows contiguous;
//   - *_backward kernels ACCUMULATE into their gradient outputs;
//   - accumulation order is fixed per backend, so a given backend is
//     bit-deterministic run to run.

enum class Backend { scalar, avx2 };

struct Conv2dDims {
    int64_t n = 1;        // batch
    int64_t c_in = 1;     // input channels
    int64_t h_in = 1;
    int64_t w_in = 1;
    int64_t c_out = 1;    // filters
    int64_t k = 3;        // square kernel side
    int64_t pad = 0;
    int64_t stride = 1;

    int64_t h_out() const { return (h_in + 2 * pad - k) / stride + 1; }
    int64_t w_out() const { return (w_in + 2 * pad - k) / stride + 1; }
    int64_t in_size() const { return n * c_in * h_in * w_in; }
    int64_t out_size() const { return n * c_out * h_out() * w_out(); }
    int64_t weight_size() const { return c_out * c_in * k * k; }
};

template <class T>
struct Kernels {
    // out[n,f,y,x] = bias[f] + sum_{c,ky,kx} in[n,c,y*s+ky-p,x*s+kx-p] * w[f,c,ky,kx]
    void (*conv2d_forward)(const Conv2dDims&, const T* in, const T* w, const T* bias, T* out);
    // gin += correlation of gout with weights (transpose of forward)
    void (*conv2d_backward_input)(const Conv2dDims&, const T* w, const T* gout, T* gin);
    // gw += in (*) gout ; gbias += channel sums of gout
    void (*conv2d_backward_params)(const Conv2dDims&, const T* in, const T* gout, T* gw, T* gbias);

    void (*relu_forward)(const T* x, T* y, int64_t len);
    void (*relu_backward)(const T* x, const T* gy, T* gx, int64_t len);  // gx += (x>0)*gy

    void (*axpy)(T a, const T* x, T* y, int64_t len);  // y += a*x

    // Per-channel mean and biased variance over the N*H*W slice.
    void (*bn_channel_stats)(const T* x, int64_t n, int64_t c, int64_t hw, T* mean, T* var);
    // y[n,c,i] = (x - mean[c]) * inv_std[c] * gamma[c] + beta[c]
    void (*bn_apply)(const T* x, int64_t n, int64_t c, int64_t hw, const T* mean,
                     const T* inv_std, const T* gamma, const T* beta, T* y);
    // Train-mode backward through the batch statistics; accumulates gx, ggamma, gbeta.
    void (*bn_backward_train)(const T* x, const T* gy, int64_t n, int64_t c, int64_t hw,
                              const T* mean, const T* inv_std, const T* gamma, T* gx,
                              T* ggamma, T* gbeta);

    void (*adam_step)(T* param, T* m, T* v, const T* g, int64_t len, T lr, T beta1, T beta2,
                      T eps, int64_t t);
    void (*sgd_momentum_step)(T* param, T* vel, const T* g, int64_t len, T lr, T momentum);
};

template <class T>
const Kernels<T>& active();

Backend backend();
void set_backend(Backend b);  // throws ArgumentError if unsupported on this CPU
bool avx2_supported();
std::string backend_name(Backend b);

namespace scalar {
template <class T> void fill_table(Kernels<T>& k);
}
namespace avx2 {
// Only populated when compiled in and the CPU supports AVX2+FMA.
bool compiled_in();
template <class T> void fill_table(Kernels<T>& k);
}

}  // namespace lupi::kern
