#include "lupi/losses.hpp"

namespace lupi {

template <class T>
nn::NodePtr<T> student_loss(nn::Tape<T>* tape, const nn::NodePtr<T>& student_probs,
                            const nn::NodePtr<T>& target_onehot) {
    if (student_probs->shape != target_onehot->shape)
        throw ArgumentError("student_loss: shape mismatch");
    return nn::cross_entropy(tape, student_probs, target_onehot);
}

template <class T>
nn::NodePtr<T> pi_loss(nn::Tape<T>* tape, const nn::NodePtr<T>& student_probs,
                       const nn::NodePtr<T>& teacher_probs, const nn::NodePtr<T>& target_onehot,
                       T alpha) {
    if (!(alpha >= T(0) && alpha <= T(1))) throw ArgumentError("pi_loss: alpha outside [0,1]");
    if (teacher_probs->requires_grad)
        throw ArgumentError("pi_loss: teacher probabilities must be detached");
    if (student_probs->shape != teacher_probs->shape ||
        student_probs->shape != target_onehot->shape)
        throw ArgumentError("pi_loss: shape mismatch");
    auto ce_truth = nn::cross_entropy(tape, student_probs, target_onehot);
    auto ce_distill = nn::cross_entropy(tape, student_probs, teacher_probs);
    return nn::add_scaled(tape, ce_truth, alpha, ce_distill, T(1) - alpha);
}

template nn::NodePtr<float> student_loss<float>(nn::Tape<float>*, const nn::NodePtr<float>&,
                                                const nn::NodePtr<float>&);
template nn::NodePtr<double> student_loss<double>(nn::Tape<double>*, const nn::NodePtr<double>&,
                                                  const nn::NodePtr<double>&);
template nn::NodePtr<float> pi_loss<float>(nn::Tape<float>*, const nn::NodePtr<float>&,
                                           const nn::NodePtr<float>&, const nn::NodePtr<float>&,
                                           float);
template nn::NodePtr<double> pi_loss<double>(nn::Tape<double>*, const nn::NodePtr<double>&,
                                             const nn::NodePtr<double>&,
                                             const nn::NodePtr<double>&, double);

}  // namespace lupi
