#include "hsic/model.hpp"

#include <nlohmann/json.hpp>

namespace hsic {

std::vector<Shape> infer_shapes(const ArchSpec& arch) {
    if (arch.num_classes < 2 || arch.dense_units.empty() ||
        arch.dense_units.back() != arch.num_classes)
        throw Error(ErrorCode::ShapeMismatch, "final dense width must equal num_classes");

    std::vector<Shape> shapes;
    std::size_t h = arch.patch_size, w = arch.patch_size, d = arch.components, c = 1;
    shapes.push_back({h, w, d, c});
    for (const auto& layer : arch.conv3d_layers) {
        if (layer.k1 > h || layer.k2 > w || layer.k3 > d)
            throw Error(ErrorCode::NegativeExtent,
                        "3D kernel " + std::to_string(layer.k1) + "x" + std::to_string(layer.k2) +
                            "x" + std::to_string(layer.k3) + " exceeds extent " +
                            shape_to_string({h, w, d}));
        h = h - layer.k1 + 1;
        w = w - layer.k2 + 1;
        d = d - layer.k3 + 1;
        c = layer.filters;
        shapes.push_back({h, w, d, c});
    }
    c = d * c;
    d = 0;
    shapes.push_back({h, w, c});
    if (arch.conv2d_layer.k1 > h || arch.conv2d_layer.k2 > w)
        throw Error(ErrorCode::NegativeExtent, "2D kernel exceeds extent");
    h = h - arch.conv2d_layer.k1 + 1;
    w = w - arch.conv2d_layer.k2 + 1;
    c = arch.conv2d_layer.filters;
    shapes.push_back({h, w, c});
    shapes.push_back({h * w * c});
    for (const std::size_t units : arch.dense_units) shapes.push_back({units});
    return shapes;
}

ArchSpec build_default_arch(std::size_t num_classes, std::size_t patch_size,
                            std::size_t components) {
    ArchSpec arch;
    arch.conv3d_layers = {{8, 5, 5, 7}, {16, 5, 5, 5}, {32, 3, 3, 3}, {64, 3, 3, 3}};
    arch.conv2d_layer = {128, 3, 3};
    arch.dense_units = {256, 128, num_classes};
    arch.num_classes = num_classes;
    arch.patch_size = patch_size;
    arch.components = components;
    try {
        infer_shapes(arch);
    } catch (const Error&) {
        throw Error(ErrorCode::PatchTooSmall,
                    "patch " + std::to_string(patch_size) + " / components " +
                        std::to_string(components) + " too small for the conv stack");
    }
    return arch;
}

std::size_t parameter_count(const ArchSpec& arch) {
    const auto shapes = infer_shapes(arch);
    std::size_t count = 0;
    std::size_t in_ch = 1;
    for (const auto& l : arch.conv3d_layers) {
        count += l.filters * l.k1 * l.k2 * l.k3 * in_ch + l.filters;
        in_ch = l.filters;
    }
    const std::size_t merged = shapes[arch.conv3d_layers.size() + 1][2];
    count += arch.conv2d_layer.filters * arch.conv2d_layer.k1 * arch.conv2d_layer.k2 * merged +
             arch.conv2d_layer.filters;
    std::size_t fan = shapes[arch.conv3d_layers.size() + 3][0];
    for (const std::size_t units : arch.dense_units) {
        count += fan * units + units;
        fan = units;
    }
    return count;
}

void save_checkpoint_raw(
    const std::vector<std::tuple<std::string, Shape, std::vector<double>>>& tensors,
    const std::string& dtype, const std::filesystem::path& json_path) {
    const std::string payload_rel = json_path.stem().string() + ".bin";
    nlohmann::json doc;
    doc["dtype"] = dtype;
    doc["byte_order"] = "little";
    doc["payload"] = payload_rel;
    doc["tensors"] = nlohmann::json::array();
    std::ofstream payload(json_path.parent_path() / payload_rel, std::ios::binary);
    for (const auto& [name, shape, values] : tensors) {
        doc["tensors"].push_back({{"name", name}, {"shape", shape}});
        if (dtype == "f32") {
            std::vector<float> v32(values.begin(), values.end());
            payload.write(reinterpret_cast<const char*>(v32.data()),
                          static_cast<std::streamsize>(v32.size() * sizeof(float)));
        } else {
            payload.write(reinterpret_cast<const char*>(values.data()),
                          static_cast<std::streamsize>(values.size() * sizeof(double)));
        }
    }
    std::ofstream out(json_path);
    out << doc.dump(2) << "\n";
}

std::vector<std::tuple<std::string, Shape, std::vector<double>>> load_checkpoint_raw(
    const std::filesystem::path& json_path, std::string& dtype_out) {
    if (!std::filesystem::exists(json_path))
        throw Error(ErrorCode::MissingFile, "checkpoint not found: " + json_path.string());
    std::ifstream in(json_path);
    nlohmann::json doc;
    in >> doc;
    dtype_out = doc.at("dtype").get<std::string>();
    const auto payload_path = json_path.parent_path() / doc.at("payload").get<std::string>();
    std::ifstream payload(payload_path, std::ios::binary);
    if (!payload)
        throw Error(ErrorCode::MissingFile, "checkpoint payload not found");

    std::vector<std::tuple<std::string, Shape, std::vector<double>>> tensors;
    for (const auto& entry : doc.at("tensors")) {
        const auto name = entry.at("name").get<std::string>();
        const auto shape = entry.at("shape").get<Shape>();
        const std::size_t n = shape_numel(shape);
        std::vector<double> values(n);
        if (dtype_out == "f32") {
            std::vector<float> v32(n);
            payload.read(reinterpret_cast<char*>(v32.data()),
                         static_cast<std::streamsize>(n * sizeof(float)));
            for (std::size_t i = 0; i < n; ++i) values[i] = v32[i];
        } else {
            payload.read(reinterpret_cast<char*>(values.data()),
                         static_cast<std::streamsize>(n * sizeof(double)));
        }
        if (!payload)
            throw Error(ErrorCode::SizeMismatch, "checkpoint payload shorter than header claims");
        tensors.emplace_back(name, shape, std::move(values));
    }
    return tensors;
}

}  // namespace hsic
