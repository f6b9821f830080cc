#include "lupi/optimizer.hpp"

#include "lupi/kern/kernels.hpp"

namespace lupi {

OptimizerKind optimizer_from_string(const std::string& s) {
    if (s == "adam") return OptimizerKind::adam;
    if (s == "sgd-momentum") return OptimizerKind::sgd_momentum;
    throw ArgumentError("unknown optimizer '" + s + "' (want adam or sgd-momentum)");
}

std::string to_string(OptimizerKind k) {
    return k == OptimizerKind::adam ? "adam" : "sgd-momentum";
}

template <class T>
Optimizer<T>::Optimizer(OptimizerKind kind, T learning_rate, std::vector<nn::NodePtr<T>> params)
    : kind_(kind), lr_(learning_rate), params_(std::move(params)) {
    if (!(lr_ > T(0))) throw ArgumentError("Optimizer: learning rate must be positive");
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p->value.size(), T(0));
        if (kind_ == OptimizerKind::adam) v_.emplace_back(p->value.size(), T(0));
    }
}

template <class T>
void Optimizer<T>::step() {
    ++t_;
    const auto& k = kern::active<T>();
    for (size_t i = 0; i < params_.size(); ++i) {
        auto& p = *params_[i];
        p.ensure_grad();
        if (kind_ == OptimizerKind::adam) {
            k.adam_step(p.value.data(), m_[i].data(), v_[i].data(), p.grad.data(), p.size(),
                        lr_, T(0.9), T(0.999), T(1e-8), t_);
        } else {
            k.sgd_momentum_step(p.value.data(), m_[i].data(), p.grad.data(), p.size(), lr_,
                                T(0.9));
        }
    }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace lupi
