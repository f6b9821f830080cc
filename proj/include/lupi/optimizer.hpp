#pragma once

#include <vector>

#include "lupi/nn/tensor.hpp"

namespace lupi {

enum class OptimizerKind { adam, sgd_momentum };

OptimizerKind optimizer_from_string(const std::string& s);
std::string to_string(OptimizerKind k);

// Applies parameter updates from the gradients accumulated on the nodes.
// Adam uses beta1=0.9, beta2=0.999, eps=1e-8 with bias correction; SGD uses
// momentum 0.9.
template <class T>
class Optimizer {
public:
    Optimizer(OptimizerKind kind, T learning_rate, std::vector<nn::NodePtr<T>> params);

    void step();

private:
    OptimizerKind kind_;
    T lr_;
    int64_t t_ = 0;
    std::vector<nn::NodePtr<T>> params_;
    std::vector<std::vector<T>> m_;  // adam first moment / sgd velocity
    std::vector<std::vector<T>> v_;  // adam second moment
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace lupi
