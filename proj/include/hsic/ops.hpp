#pragma once

#include <algorithm>
#include <cmath>

#include "hsic/tensor.hpp"

namespace hsic::ops {

// Test hook: scales the input-gradient of conv3d. 1.0 in normal operation;
// the selftest corruption check sets it to verify gradcheck catches errors.
inline double debug_conv3d_grad_scale = 1.0;

namespace detail {

template <typename T>
void accumulate_grad(TensorNode<T>& node, const std::vector<T>& delta) {
    node.ensure_grad();
    for (std::size_t i = 0; i < delta.size(); ++i) node.grad[i] += delta[i];
}

}  // namespace detail

/// Valid 3D cross-correlation, stride 1.
/// input batch x H x W x D x Cin, kernels Cout x K1 x K2 x K3 x Cin.
template <typename T>
TensorPtr<T> conv3d(Tape<T>& tape, const TensorPtr<T>& input, const TensorPtr<T>& kernels,
                    const TensorPtr<T>& bias) {
    if (input->shape.size() != 5 || kernels->shape.size() != 5 || bias->shape.size() != 1)
        throw Error(ErrorCode::ShapeMismatch, "conv3d expects 5-d input/kernels and 1-d bias");
    const std::size_t B = input->shape[0], H = input->shape[1], W = input->shape[2],
                      D = input->shape[3], Ci = input->shape[4];
    const std::size_t Co = kernels->shape[0], K1 = kernels->shape[1], K2 = kernels->shape[2],
                      K3 = kernels->shape[3];
    if (kernels->shape[4] != Ci)
        throw Error(ErrorCode::ShapeMismatch, "conv3d channel mismatch");
    if (bias->shape[0] != Co)
        throw Error(ErrorCode::ShapeMismatch, "conv3d bias length mismatch");
    if (K1 > H || K2 > W || K3 > D)
        throw Error(ErrorCode::KernelTooLarge, "conv3d kernel exceeds input extent");

    const std::size_t Ho = H - K1 + 1, Wo = W - K2 + 1, Do = D - K3 + 1;
    auto out = make_tensor<T>({B, Ho, Wo, Do, Co});
    const T* in = input->value.data();
    const T* ker = kernels->value.data();
    const T* bs = bias->value.data();
    T* ov = out->value.data();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t x = 0; x < Ho; ++x)
            for (std::size_t y = 0; y < Wo; ++y)
                for (std::size_t z = 0; z < Do; ++z) {
                    T* orow = ov + (((b * Ho + x) * Wo + y) * Do + z) * Co;
                    for (std::size_t o = 0; o < Co; ++o) {
                        T acc = bs[o];
                        const T* kbase = ker + o * K1 * K2 * K3 * Ci;
                        for (std::size_t i = 0; i < K1; ++i)
                            for (std::size_t j = 0; j < K2; ++j) {
                                const T* ip =
                                    in + (((b * H + x + i) * W + y + j) * D + z) * Ci;
                                const T* kp = kbase + ((i * K2 + j) * K3) * Ci;
                                for (std::size_t lc = 0; lc < K3 * Ci; ++lc)
                                    acc += ip[lc] * kp[lc];
                            }
                        orow[o] = acc;
                    }
                }

    out->requires_grad = input->requires_grad || kernels->requires_grad || bias->requires_grad;
    out->parents = {input, kernels, bias};
    out->backward_fn = [B, H, W, D, Ci, Co, K1, K2, K3, Ho, Wo, Do, input, kernels,
                        bias](TensorNode<T>& node) {
        const T* og = node.grad.data();
        const T* in = input->value.data();
        const T* ker = kernels->value.data();
        if (input->requires_grad) input->ensure_grad();
        if (kernels->requires_grad) kernels->ensure_grad();
        if (bias->requires_grad) bias->ensure_grad();
        const T gscale = static_cast<T>(debug_conv3d_grad_scale);
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t x = 0; x < Ho; ++x)
                for (std::size_t y = 0; y < Wo; ++y)
                    for (std::size_t z = 0; z < Do; ++z) {
                        const T* grow = og + (((b * Ho + x) * Wo + y) * Do + z) * Co;
                        for (std::size_t o = 0; o < Co; ++o) {
                            const T g = grow[o];
                            if (g == T(0)) continue;
                            if (bias->requires_grad) bias->grad[o] += g;
                            const std::size_t kbase = o * K1 * K2 * K3 * Ci;
                            for (std::size_t i = 0; i < K1; ++i)
                                for (std::size_t j = 0; j < K2; ++j) {
                                    const std::size_t ibase =
                                        (((b * H + x + i) * W + y + j) * D + z) * Ci;
                                    const std::size_t koff = kbase + ((i * K2 + j) * K3) * Ci;
                                    if (kernels->requires_grad)
                                        for (std::size_t lc = 0; lc < K3 * Ci; ++lc)
                                            kernels->grad[koff + lc] += g * in[ibase + lc];
                                    if (input->requires_grad)
                                        for (std::size_t lc = 0; lc < K3 * Ci; ++lc)
                                            input->grad[ibase + lc] +=
                                                gscale * g * ker[koff + lc];
                                }
                        }
                    }
    };
    return tape.record(std::move(out));
}

/// Valid 2D cross-correlation, stride 1.
/// input batch x H x W x Cin, kernels Cout x K1 x K2 x Cin.
template <typename T>
TensorPtr<T> conv2d(Tape<T>& tape, const TensorPtr<T>& input, const TensorPtr<T>& kernels,
                    const TensorPtr<T>& bias) {
    if (input->shape.size() != 4 || kernels->shape.size() != 4 || bias->shape.size() != 1)
        throw Error(ErrorCode::ShapeMismatch, "conv2d expects 4-d input/kernels and 1-d bias");
    const std::size_t B = input->shape[0], H = input->shape[1], W = input->shape[2],
                      Ci = input->shape[3];
    const std::size_t Co = kernels->shape[0], K1 = kernels->shape[1], K2 = kernels->shape[2];
    if (kernels->shape[3] != Ci)
        throw Error(ErrorCode::ShapeMismatch, "conv2d channel mismatch");
    if (bias->shape[0] != Co)
        throw Error(ErrorCode::ShapeMismatch, "conv2d bias length mismatch");
    if (K1 > H || K2 > W)
        throw Error(ErrorCode::KernelTooLarge, "conv2d kernel exceeds input extent");

    const std::size_t Ho = H - K1 + 1, Wo = W - K2 + 1;
    auto out = make_tensor<T>({B, Ho, Wo, Co});
    const T* in = input->value.data();
    const T* ker = kernels->value.data();
    const T* bs = bias->value.data();
    T* ov = out->value.data();
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t x = 0; x < Ho; ++x)
            for (std::size_t y = 0; y < Wo; ++y) {
                T* orow = ov + ((b * Ho + x) * Wo + y) * Co;
                for (std::size_t o = 0; o < Co; ++o) {
                    T acc = bs[o];
                    const T* kbase = ker + o * K1 * K2 * Ci;
                    for (std::size_t i = 0; i < K1; ++i) {
                        const T* ip = in + ((b * H + x + i) * W + y) * Ci;
                        const T* kp = kbase + i * K2 * Ci;
                        for (std::size_t jc = 0; jc < K2 * Ci; ++jc) acc += ip[jc] * kp[jc];
                    }
                    orow[o] = acc;
                }
            }

    out->requires_grad = input->requires_grad || kernels->requires_grad || bias->requires_grad;
    out->parents = {input, kernels, bias};
    out->backward_fn = [B, H, W, Ci, Co, K1, K2, Ho, Wo, input, kernels,
                        bias](TensorNode<T>& node) {
        const T* og = node.grad.data();
        const T* in = input->value.data();
        const T* ker = kernels->value.data();
        if (input->requires_grad) input->ensure_grad();
        if (kernels->requires_grad) kernels->ensure_grad();
        if (bias->requires_grad) bias->ensure_grad();
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t x = 0; x < Ho; ++x)
                for (std::size_t y = 0; y < Wo; ++y) {
                    const T* grow = og + ((b * Ho + x) * Wo + y) * Co;
                    for (std::size_t o = 0; o < Co; ++o) {
                        const T g = grow[o];
                        if (g == T(0)) continue;
                        if (bias->requires_grad) bias->grad[o] += g;
                        const std::size_t kbase = o * K1 * K2 * Ci;
                        for (std::size_t i = 0; i < K1; ++i) {
                            const std::size_t ibase = ((b * H + x + i) * W + y) * Ci;
                            const std::size_t koff = kbase + i * K2 * Ci;
                            if (kernels->requires_grad)
                                for (std::size_t jc = 0; jc < K2 * Ci; ++jc)
                                    kernels->grad[koff + jc] += g * in[ibase + jc];
                            if (input->requires_grad)
                                for (std::size_t jc = 0; jc < K2 * Ci; ++jc)
                                    input->grad[ibase + jc] += g * ker[koff + jc];
                        }
                    }
                }
    };
    return tape.record(std::move(out));
}

/// Fully connected layer: out = input . weights + bias.
template <typename T>
TensorPtr<T> dense(Tape<T>& tape, const TensorPtr<T>& input, const TensorPtr<T>& weights,
                   const TensorPtr<T>& bias) {
    if (input->shape.size() != 2 || weights->shape.size() != 2 || bias->shape.size() != 1)
        throw Error(ErrorCode::ShapeMismatch, "dense expects 2-d input/weights and 1-d bias");
    const std::size_t B = input->shape[0], F = input->shape[1];
    const std::size_t U = weights->shape[1];
    if (weights->shape[0] != F || bias->shape[0] != U)
        throw Error(ErrorCode::ShapeMismatch, "dense dimension mismatch");

    auto out = make_tensor<T>({B, U});
    for (std::size_t b = 0; b < B; ++b) {
        T* orow = out->value.data() + b * U;
        for (std::size_t u = 0; u < U; ++u) orow[u] = bias->value[u];
        const T* irow = input->value.data() + b * F;
        for (std::size_t f = 0; f < F; ++f) {
            const T x = irow[f];
            if (x == T(0)) continue;
            const T* wrow = weights->value.data() + f * U;
            for (std::size_t u = 0; u < U; ++u) orow[u] += x * wrow[u];
        }
    }

    out->requires_grad = input->requires_grad || weights->requires_grad || bias->requires_grad;
    out->parents = {input, weights, bias};
    out->backward_fn = [B, F, U, input, weights, bias](TensorNode<T>& node) {
        const T* og = node.grad.data();
        if (input->requires_grad) input->ensure_grad();
        if (weights->requires_grad) weights->ensure_grad();
        if (bias->requires_grad) bias->ensure_grad();
        for (std::size_t b = 0; b < B; ++b) {
            const T* grow = og + b * U;
            if (bias->requires_grad)
                for (std::size_t u = 0; u < U; ++u) bias->grad[u] += grow[u];
            const T* irow = input->value.data() + b * F;
            for (std::size_t f = 0; f < F; ++f) {
                const T* wrow = weights->value.data() + f * U;
                if (weights->requires_grad) {
                    const T x = irow[f];
                    for (std::size_t u = 0; u < U; ++u) weights->grad[f * U + u] += x * grow[u];
                }
                if (input->requires_grad) {
                    T acc = T(0);
                    for (std::size_t u = 0; u < U; ++u) acc += grow[u] * wrow[u];
                    input->grad[b * F + f] += acc;
                }
            }
        }
    };
    return tape.record(std::move(out));
}

template <typename T>
TensorPtr<T> relu(Tape<T>& tape, const TensorPtr<T>& input) {
    auto out = make_tensor<T>(input->shape);
    for (std::size_t i = 0; i < input->numel(); ++i)
        out->value[i] = input->value[i] > T(0) ? input->value[i] : T(0);
    out->requires_grad = input->requires_grad;
    out->parents = {input};
    out->backward_fn = [input](TensorNode<T>& node) {
        if (!input->requires_grad) return;
        input->ensure_grad();
        for (std::size_t i = 0; i < node.grad.size(); ++i)
            if (input->value[i] > T(0)) input->grad[i] += node.grad[i];
    };
    return tape.record(std::move(out));
}

/// Numerically stable softmax over the final axis.
template <typename T>
TensorPtr<T> softmax(Tape<T>& tape, const TensorPtr<T>& input) {
    if (input->shape.empty())
        throw Error(ErrorCode::ShapeMismatch, "softmax needs at least one axis");
    const std::size_t Y = input->shape.back();
    const std::size_t rows = input->numel() / Y;
    auto out = make_tensor<T>(input->shape);
    for (std::size_t r = 0; r < rows; ++r) {
        const T* in = input->value.data() + r * Y;
        T* o = out->value.data() + r * Y;
        T mx = in[0];
        for (std::size_t y = 1; y < Y; ++y) mx = std::max(mx, in[y]);
        T sum = T(0);
        for (std::size_t y = 0; y < Y; ++y) {
            o[y] = std::exp(in[y] - mx);
            sum += o[y];
        }
        for (std::size_t y = 0; y < Y; ++y) o[y] /= sum;
    }
    out->requires_grad = input->requires_grad;
    out->parents = {input};
    out->backward_fn = [Y, rows, input](TensorNode<T>& node) {
        if (!input->requires_grad) return;
        input->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const T* q = node.value.data() + r * Y;
            const T* g = node.grad.data() + r * Y;
            T dot = T(0);
            for (std::size_t y = 0; y < Y; ++y) dot += q[y] * g[y];
            for (std::size_t y = 0; y < Y; ++y)
                input->grad[r * Y + y] += q[y] * (g[y] - dot);
        }
    };
    return tape.record(std::move(out));
}

template <typename T>
TensorPtr<T> reshape(Tape<T>& tape, const TensorPtr<T>& input, Shape new_shape) {
    if (shape_numel(new_shape) != input->numel())
        throw Error(ErrorCode::CountMismatch,
                    "reshape " + shape_to_string(input->shape) + " -> " +
                        shape_to_string(new_shape) + " changes element count");
    auto out = make_tensor<T>(std::move(new_shape), std::vector<T>(input->value));
    out->requires_grad = input->requires_grad;
    out->parents = {input};
    out->backward_fn = [input](TensorNode<T>& node) {
        if (!input->requires_grad) return;
        detail::accumulate_grad(*input, node.grad);
    };
    return tape.record(std::move(out));
}

/// Inverted dropout; the surviving entries are scaled by 1/(1-p).
template <typename T>
TensorPtr<T> dropout(Tape<T>& tape, const TensorPtr<T>& input, double p, Rng& rng) {
    if (p <= 0.0) return reshape(tape, input, input->shape);
    auto mask = std::make_shared<std::vector<T>>(input->numel());
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    auto out = make_tensor<T>(input->shape);
    for (std::size_t i = 0; i < input->numel(); ++i) {
        (*mask)[i] = rng.next_double() >= p ? keep_scale : T(0);
        out->value[i] = input->value[i] * (*mask)[i];
    }
    out->requires_grad = input->requires_grad;
    out->parents = {input};
    out->backward_fn = [input, mask](TensorNode<T>& node) {
        if (!input->requires_grad) return;
        input->ensure_grad();
        for (std::size_t i = 0; i < node.grad.size(); ++i)
            input->grad[i] += node.grad[i] * (*mask)[i];
    };
    return tape.record(std::move(out));
}

template <typename T>
TensorPtr<T> sum(Tape<T>& tape, const TensorPtr<T>& input) {
    auto out = make_tensor<T>(Shape{1});
    T acc = T(0);
    for (const T v : input->value) acc += v;
    out->value[0] = acc;
    out->requires_grad = input->requires_grad;
    out->parents = {input};
    out->backward_fn = [input](TensorNode<T>& node) {
        if (!input->requires_grad) return;
        input->ensure_grad();
        for (auto& g : input->grad) g += node.grad[0];
    };
    return tape.record(std::move(out));
}

}  // namespace hsic::ops
