#pragma once

#include "lupi/nn/ops.hpp"

namespace lupi {

// Baseline loss: cross-entropy between student probabilities and the one-hot
// ground truth.
template <class T>
nn::NodePtr<T> student_loss(nn::Tape<T>* tape, const nn::NodePtr<T>& student_probs,
                            const nn::NodePtr<T>& target_onehot);

// Blended privileged-information loss:
//   alpha * CE(student, truth) + (1 - alpha) * CE(student, teacher).
// Teacher probabilities must be detached (produced without a tape); gradients
// flow only through the student probabilities. At alpha = 1 the value and the
// gradients are bit-identical to student_loss.
template <class T>
nn::NodePtr<T> pi_loss(nn::Tape<T>* tape, const nn::NodePtr<T>& student_probs,
                       const nn::NodePtr<T>& teacher_probs, const nn::NodePtr<T>& target_onehot,
                       T alpha);

}  // namespace lupi
