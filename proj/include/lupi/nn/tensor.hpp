#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <unordered_set>
#include <vector>

#include "lupi/core.hpp"

namespace lupi::nn {

using Shape = std::vector<int64_t>;

inline int64_t numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

// One tensor in the computation record. Values are written once by the op
// that produces them; gradients are zeroed and accumulated during a backward
// pass over the tape that recorded the op.
template <class T>
struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;  // same length as value once a backward pass touches it
    bool requires_grad = false;
    int node_id = -1;

    int64_t size() const { return static_cast<int64_t>(value.size()); }
    int64_t dim(size_t i) const { return shape[i]; }

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    }
};

template <class T>
using NodePtr = std::shared_ptr<Node<T>>;

template <class T>
NodePtr<T> make_node(Shape shape, bool requires_grad = false) {
    auto n = std::make_shared<Node<T>>();
    n->shape = std::move(shape);
    n->value.assign(static_cast<size_t>(numel(n->shape)), T(0));
    n->requires_grad = requires_grad;
    return n;
}

// Reverse-mode tape. Ops append steps in execution order; backward() walks
// them in reverse, running only steps whose output contributes to the loss.
// Zero-coefficient branches (see add_scaled) are therefore skipped entirely,
// which keeps e.g. an alpha=1 blended loss bit-identical to its first term.
template <class T>
class Tape {
public:
    struct Step {
        NodePtr<T> output;
        std::vector<NodePtr<T>> inputs;  // differentiable dependencies only
        std::function<void()> backward;
        const char* name = "";
    };

    void record(Step step) {
        step.output->node_id = next_id_++;
        steps_.push_back(std::move(step));
    }

    void backward(const NodePtr<T>& loss) {
        if (loss->size() != 1) throw ArgumentError("Tape::backward: loss must be scalar");
        for (auto& step : steps_) {
            if (step.output->requires_grad) step.output->ensure_grad();
            for (auto& in : step.inputs)
                if (in->requires_grad) in->ensure_grad();
        }
        loss->ensure_grad();
        loss->grad[0] = T(1);

        std::unordered_set<const Node<T>*> needed;
        needed.insert(loss.get());
        for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
            if (!needed.count(it->output.get())) continue;
            it->backward();
            for (auto& in : it->inputs)
                if (in->requires_grad) needed.insert(in.get());
        }
    }

    size_t step_count() const { return steps_.size(); }

    void clear() {
        steps_.clear();
        next_id_ = 0;
    }

private:
    std::vector<Step> steps_;
    int next_id_ = 0;
};

}  // namespace lupi::nn
