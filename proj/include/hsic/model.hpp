#pragma once

#include <array>
#include <filesystem>
#include <fstream>

#include "hsic/loss.hpp"
#include "hsic/ops.hpp"
#include "hsic/patches.hpp"

namespace hsic {

struct Conv3dSpec {
    std::size_t filters, k1, k2, k3;
};
struct Conv2dSpec {
    std::size_t filters, k1, k2;
};

/// The five-convolution hybrid stack plus its dense classifier head.
struct ArchSpec {
    std::vector<Conv3dSpec> conv3d_layers;
    Conv2dSpec conv2d_layer{};
    std::vector<std::size_t> dense_units;  // hidden widths then Y
    std::size_t num_classes = 0;
    std::size_t patch_size = 0;  // P
    std::size_t components = 0;  // k (spectral depth of the input patch)
};

/// Output shape of every stage for a single sample (batch axis omitted):
/// input, each 3D conv, the depth-merging reshape, the 2D conv, flatten,
/// then each dense layer.
std::vector<Shape> infer_shapes(const ArchSpec& arch);

/// The fixed conv stack 8/16/32/64 (3D) + 128 (2D) with head [256, 128, Y].
ArchSpec build_default_arch(std::size_t num_classes, std::size_t patch_size = 15,
                            std::size_t components = 15);

std::size_t parameter_count(const ArchSpec& arch);

template <typename T>
struct ModelParams {
    ArchSpec arch;
    std::vector<TensorPtr<T>> tensors;  // checkpoint order

    TensorPtr<T> find(const std::string& name) const {
        for (const auto& t : tensors)
            if (t->name == name) return t;
        throw Error(ErrorCode::ShapeMismatch, "no parameter named " + name);
    }

    void zero_grads() const {
        for (const auto& t : tensors) t->zero_grad();
    }
};

/// He-uniform conv and hidden dense weights, Glorot-uniform output layer,
/// zero biases; deterministic per seed.
template <typename T>
ModelParams<T> init_params(const ArchSpec& arch, std::uint64_t seed) {
    infer_shapes(arch);  // validates
    ModelParams<T> params;
    params.arch = arch;
    std::uint64_t mix = seed;
    splitmix64(mix);
    Rng rng(mix ^ 0x1417ull);

    std::size_t in_ch = 1;
    for (std::size_t l = 0; l < arch.conv3d_layers.size(); ++l) {
        const auto& c = arch.conv3d_layers[l];
        auto kernels = make_tensor<T>({c.filters, c.k1, c.k2, c.k3, in_ch}, true,
                                      "conv3d_" + std::to_string(l + 1) + ".kernels");
        const double fan_in = static_cast<double>(c.k1 * c.k2 * c.k3 * in_ch);
        fill_uniform(*kernels, rng, std::sqrt(6.0 / fan_in));
        auto bias = make_tensor<T>({c.filters}, true,
                                   "conv3d_" + std::to_string(l + 1) + ".bias");
        params.tensors.push_back(std::move(kernels));
        params.tensors.push_back(std::move(bias));
        in_ch = c.filters;
    }

    // Depth is folded into channels ahead of the 2D stage.
    const auto shapes = infer_shapes(arch);
    const std::size_t depth_merged = shapes[arch.conv3d_layers.size() + 1][2];
    {
        const auto& c = arch.conv2d_layer;
        auto kernels =
            make_tensor<T>({c.filters, c.k1, c.k2, depth_merged}, true, "conv2d.kernels");
        const double fan_in = static_cast<double>(c.k1 * c.k2 * depth_merged);
        fill_uniform(*kernels, rng, std::sqrt(6.0 / fan_in));
        auto bias = make_tensor<T>({c.filters}, true, "conv2d.bias");
        params.tensors.push_back(std::move(kernels));
        params.tensors.push_back(std::move(bias));
    }

    std::size_t fan = shapes[arch.conv3d_layers.size() + 3][0];  // flatten width
    for (std::size_t l = 0; l < arch.dense_units.size(); ++l) {
        const std::size_t units = arch.dense_units[l];
        auto weights =
            make_tensor<T>({fan, units}, true, "dense_" + std::to_string(l + 1) + ".weights");
        const bool output_layer = (l + 1 == arch.dense_units.size());
        const double bound = output_layer
                                 ? std::sqrt(6.0 / static_cast<double>(fan + units))
                                 : std::sqrt(6.0 / static_cast<double>(fan));
        fill_uniform(*weights, rng, bound);
        auto bias = make_tensor<T>({units}, true, "dense_" + std::to_string(l + 1) + ".bias");
        params.tensors.push_back(std::move(weights));
        params.tensors.push_back(std::move(bias));
        fan = units;
    }
    return params;
}

/// Forward pass to class probabilities for a batch x P x P x k x 1 input.
/// `dropout_p` > 0 applies inverted dropout on the hidden dense activations
/// (training only; pass 0 for evaluation).
template <typename T>
TensorPtr<T> forward(Tape<T>& tape, const ModelParams<T>& params, const TensorPtr<T>& input,
                     double dropout_p = 0.0, Rng* dropout_rng = nullptr) {
    const auto& arch = params.arch;
    if (input->shape.size() != 5 || input->shape[1] != arch.patch_size ||
        input->shape[2] != arch.patch_size || input->shape[3] != arch.components ||
        input->shape[4] != 1)
        throw Error(ErrorCode::ShapeMismatch,
                    "model input must be batch x " + std::to_string(arch.patch_size) + " x " +
                        std::to_string(arch.patch_size) + " x " +
                        std::to_string(arch.components) + " x 1");

    auto x = input;
    for (std::size_t l = 0; l < arch.conv3d_layers.size(); ++l) {
        x = ops::conv3d(tape, x, params.find("conv3d_" + std::to_string(l + 1) + ".kernels"),
                        params.find("conv3d_" + std::to_string(l + 1) + ".bias"));
        x = ops::relu(tape, x);
    }
    // Merge depth into channels: B x H x W x D x C -> B x H x W x (D*C).
    x = ops::reshape(tape, x,
                     Shape{x->shape[0], x->shape[1], x->shape[2], x->shape[3] * x->shape[4]});
    x = ops::conv2d(tape, x, params.find("conv2d.kernels"), params.find("conv2d.bias"));
    x = ops::relu(tape, x);
    x = ops::reshape(tape, x, Shape{x->shape[0], x->shape[1] * x->shape[2] * x->shape[3]});
    for (std::size_t l = 0; l < arch.dense_units.size(); ++l) {
        x = ops::dense(tape, x, params.find("dense_" + std::to_string(l + 1) + ".weights"),
                       params.find("dense_" + std::to_string(l + 1) + ".bias"));
        if (l + 1 < arch.dense_units.size()) {
            x = ops::relu(tape, x);
            if (dropout_p > 0.0 && dropout_rng) x = ops::dropout(tape, x, dropout_p, *dropout_rng);
        }
    }
    return ops::softmax(tape, x);
}

template <typename T>
TensorPtr<T> batch_to_tensor(const PatchBatch& batch) {
    std::vector<T> values(batch.data.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<T>(batch.data[i]);
    return make_tensor<T>(Shape{batch.batch, batch.patch_size, batch.patch_size, batch.bands, 1},
                          std::move(values));
}

void save_checkpoint_raw(const std::vector<std::tuple<std::string, Shape, std::vector<double>>>& tensors,
                         const std::string& dtype, const std::filesystem::path& json_path);

template <typename T>
void save_checkpoint(const ModelParams<T>& params, const std::filesystem::path& json_path) {
    std::vector<std::tuple<std::string, Shape, std::vector<double>>> raw;
    for (const auto& t : params.tensors) {
        std::vector<double> v(t->value.begin(), t->value.end());
        raw.emplace_back(t->name, t->shape, std::move(v));
    }
    save_checkpoint_raw(raw, sizeof(T) == 4 ? "f32" : "f64", json_path);
}

std::vector<std::tuple<std::string, Shape, std::vector<double>>> load_checkpoint_raw(
    const std::filesystem::path& json_path, std::string& dtype_out);

/// Loads a checkpoint into freshly initialized parameters for `arch`;
/// names and shapes must match exactly.
template <typename T>
ModelParams<T> load_checkpoint(const ArchSpec& arch, const std::filesystem::path& json_path) {
    ModelParams<T> params = init_params<T>(arch, 0);
    std::string dtype;
    auto raw = load_checkpoint_raw(json_path, dtype);
    if (raw.size() != params.tensors.size())
        throw Error(ErrorCode::ManifestMismatch, "checkpoint tensor count does not match arch");
    for (std::size_t i = 0; i < raw.size(); ++i) {
        auto& [name, shape, values] = raw[i];
        auto& dst = params.tensors[i];
        if (dst->name != name || dst->shape != shape)
            throw Error(ErrorCode::ManifestMismatch,
                        "checkpoint tensor " + name + " does not match arch");
        for (std::size_t j = 0; j < values.size(); ++j)
            dst->value[j] = static_cast<T>(values[j]);
    }
    return params;
}

}  // namespace hsic
