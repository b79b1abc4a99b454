#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "hsic/errors.hpp"
#include "hsic/rng.hpp"

namespace hsic {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_to_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

/// A dense row-major tensor participating in a gradient tape. Non-leaf nodes
/// carry a pull-style backward closure that scatters this node's grad into
/// its parents' grads.
template <typename T>
struct TensorNode {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    bool requires_grad = false;
    std::string name;
    std::function<void(TensorNode<T>&)> backward_fn;
    std::vector<std::shared_ptr<TensorNode<T>>> parents;

    std::size_t numel() const { return value.size(); }

    void ensure_grad() {
        if (grad.size() != value.size()) grad.assign(value.size(), T(0));
    }
    void zero_grad() { grad.assign(value.size(), T(0)); }
};

template <typename T>
using TensorPtr = std::shared_ptr<TensorNode<T>>;

template <typename T>
TensorPtr<T> make_tensor(Shape shape, bool requires_grad = false, std::string name = {}) {
    auto t = std::make_shared<TensorNode<T>>();
    t->shape = std::move(shape);
    t->value.assign(shape_numel(t->shape), T(0));
    t->requires_grad = requires_grad;
    t->name = std::move(name);
    return t;
}

template <typename T>
TensorPtr<T> make_tensor(Shape shape, std::vector<T> values, bool requires_grad = false) {
    if (values.size() != shape_numel(shape))
        throw Error(ErrorCode::CountMismatch, "value count does not match shape");
    auto t = std::make_shared<TensorNode<T>>();
    t->shape = std::move(shape);
    t->value = std::move(values);
    t->requires_grad = requires_grad;
    return t;
}

/// Records executed operations in execution order; execution order is a
/// topological order since every op's inputs already exist when it runs.
template <typename T>
class Tape {
public:
    TensorPtr<T>& record(TensorPtr<T> node) {
        nodes_.push_back(std::move(node));
        return nodes_.back();
    }

    std::size_t size() const { return nodes_.size(); }

    /// Reverse-topological traversal populating grads of every requires_grad
    /// tensor reachable from `loss`. A second call without reset() is rejected.
    void backward(const TensorPtr<T>& loss) {
        if (loss->numel() != 1)
            throw Error(ErrorCode::NotScalar, "backward requires a scalar loss");
        if (done_)
            throw Error(ErrorCode::AlreadyBackpropagated,
                        "tape already backpropagated; reset() first");
        done_ = true;
        loss->ensure_grad();
        loss->grad[0] = T(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            auto& node = **it;
            if (node.backward_fn && !node.grad.empty()) node.backward_fn(node);
        }
    }

    /// Drops the recorded graph, keeping externally held leaves alive.
    void reset() {
        nodes_.clear();
        done_ = false;
    }

private:
    std::vector<TensorPtr<T>> nodes_;
    bool done_ = false;
};

template <typename T>
void fill_uniform(TensorNode<T>& t, Rng& rng, double bound) {
    for (auto& v : t.value) v = static_cast<T>(rng.next_uniform(bound));
}

}  // namespace hsic
