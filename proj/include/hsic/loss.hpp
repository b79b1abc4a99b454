#pragma once

#include <cmath>
#include <cstdint>

#include "hsic/ops.hpp"

namespace hsic {

struct SmoothingParams {
    double epsilon = 0.1;      // weight factor in [0, 1]
    std::size_t num_classes = 0;

    void validate() const {
        if (!(epsilon >= 0.0 && epsilon <= 1.0))
            throw Error(ErrorCode::ConfigError, "epsilon must lie in [0, 1]");
        if (num_classes < 2)
            throw Error(ErrorCode::ConfigError, "num_classes must be >= 2");
    }
};

/// Soft targets: a row-stochastic batch x Y matrix.
template <typename T>
struct TargetDistribution {
    std::size_t batch = 0;
    std::size_t num_classes = 0;
    std::vector<T> probs;  // row-major batch x Y

    const T* row(std::size_t i) const { return probs.data() + i * num_classes; }
};

// Probabilities are clamped here before the log, so a confident wrong
// prediction yields a large finite loss instead of -inf.
inline constexpr double kProbFloor = 1e-12;

enum class LossReduction { Sum, Mean };

/// Convex mix of the one-hot target and the uniform distribution:
/// 1 - eps + eps/Y at the true class, eps/Y elsewhere.
template <typename T>
TargetDistribution<T> smooth_targets(const std::vector<std::uint16_t>& labels,
                                     const SmoothingParams& params) {
    params.validate();
    const std::size_t Y = params.num_classes;
    TargetDistribution<T> targets;
    targets.batch = labels.size();
    targets.num_classes = Y;
    const T off = static_cast<T>(params.epsilon / static_cast<double>(Y));
    const T on = static_cast<T>(1.0 - params.epsilon + params.epsilon / static_cast<double>(Y));
    targets.probs.assign(labels.size() * Y, off);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 1 || labels[i] > Y)
            throw Error(ErrorCode::LabelOutOfRange,
                        "label " + std::to_string(labels[i]) + " outside 1.." + std::to_string(Y));
        targets.probs[i * Y + (labels[i] - 1)] = on;
    }
    return targets;
}

template <typename T>
TargetDistribution<T> one_hot_targets(const std::vector<std::uint16_t>& labels, std::size_t Y) {
    return smooth_targets<T>(labels, SmoothingParams{0.0, Y});
}

/// Cross-entropy of predicted probabilities against soft targets, recorded on
/// the tape (differentiable through the probs' parent softmax). Sum reduction
/// by default; Mean divides by the batch size.
template <typename T>
TensorPtr<T> cross_entropy(Tape<T>& tape, const TensorPtr<T>& probs,
                           const TargetDistribution<T>& targets,
                           LossReduction reduction = LossReduction::Sum) {
    if (probs->shape.size() != 2 || probs->shape[0] != targets.batch ||
        probs->shape[1] != targets.num_classes)
        throw Error(ErrorCode::ShapeMismatch, "cross_entropy shape mismatch");
    const std::size_t B = targets.batch, Y = targets.num_classes;
    const T scale = reduction == LossReduction::Mean ? static_cast<T>(1.0 / B) : T(1);
    const T floor = static_cast<T>(kProbFloor);

    auto out = make_tensor<T>(Shape{1});
    T acc = T(0);
    for (std::size_t i = 0; i < B * Y; ++i)
        acc -= targets.probs[i] * std::log(std::max(probs->value[i], floor));
    out->value[0] = acc * scale;
    out->requires_grad = probs->requires_grad;
    out->parents = {probs};
    auto target_probs = targets.probs;
    out->backward_fn = [probs, target_probs = std::move(target_probs), scale,
                        floor](TensorNode<T>& node) {
        if (!probs->requires_grad) return;
        probs->ensure_grad();
        const T g = node.grad[0] * scale;
        for (std::size_t i = 0; i < target_probs.size(); ++i)
            if (probs->value[i] > floor)
                probs->grad[i] -= g * target_probs[i] / probs->value[i];
    };
    return tape.record(std::move(out));
}

/// Same loss via the two-term decomposition
/// (1-eps) H(one-hot, q) + eps H(uniform, q), no tape involvement.
template <typename T>
T decomposed_loss(const std::vector<T>& probs, const std::vector<std::uint16_t>& labels,
                  const SmoothingParams& params, LossReduction reduction = LossReduction::Sum) {
    params.validate();
    const std::size_t Y = params.num_classes;
    if (probs.size() != labels.size() * Y)
        throw Error(ErrorCode::ShapeMismatch, "decomposed_loss shape mismatch");
    const T floor = static_cast<T>(kProbFloor);
    T total = T(0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 1 || labels[i] > Y)
            throw Error(ErrorCode::LabelOutOfRange, "label outside 1..Y");
        T hard = -std::log(std::max(probs[i * Y + labels[i] - 1], floor));
        T uniform = T(0);
        for (std::size_t y = 0; y < Y; ++y)
            uniform -= std::log(std::max(probs[i * Y + y], floor));
        uniform /= static_cast<T>(Y);
        total += static_cast<T>(1.0 - params.epsilon) * hard +
                 static_cast<T>(params.epsilon) * uniform;
    }
    if (reduction == LossReduction::Mean) total /= static_cast<T>(labels.size());
    return total;
}

/// Analytic gradient of the sum-reduced smoothed cross-entropy w.r.t. the
/// logits feeding the softmax: q - p' per row.
template <typename T>
std::vector<T> loss_grad_logits(const std::vector<T>& probs,
                                const TargetDistribution<T>& targets) {
    if (probs.size() != targets.probs.size())
        throw Error(ErrorCode::ShapeMismatch, "loss_grad_logits shape mismatch");
    std::vector<T> grad(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) grad[i] = probs[i] - targets.probs[i];
    return grad;
}

}  // namespace hsic
