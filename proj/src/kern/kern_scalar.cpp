#include "scalar_impl.hpp"

namespace lupi::kern::scalar {

template <class T>
void fill_table(Kernels<T>& k) {
    namespace si = lupi::kern::scalar_impl;
    k.conv2d_forward = si::conv2d_forward<T>;
    k.conv2d_backward_input = si::conv2d_backward_input<T>;
    k.conv2d_backward_params = si::conv2d_backward_params<T>;
    k.relu_forward = si::relu_forward<T>;
    k.relu_backward = si::relu_backward<T>;
    k.axpy = si::axpy<T>;
    k.bn_channel_stats = si::bn_channel_stats<T>;
    k.bn_apply = si::bn_apply<T>;
    k.bn_backward_train = si::bn_backward_train<T>;
    k.adam_step = si::adam_step<T>;
    k.sgd_momentum_step = si::sgd_momentum_step<T>;
}

template void fill_table<float>(Kernels<float>&);
template void fill_table<double>(Kernels<double>&);

}  // namespace lupi::kern::scalar
