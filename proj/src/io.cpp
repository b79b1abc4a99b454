#include "hsic/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

namespace hsic {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_header(const fs::path& header_path) {
    if (!fs::exists(header_path))
        throw Error(ErrorCode::MissingFile, "header not found: " + header_path.string());
    std::ifstream in(header_path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedHeader,
                    "cannot parse header " + header_path.string() + ": " + e.what());
    }
    if (!doc.is_object())
        throw Error(ErrorCode::MalformedHeader, "header is not a JSON object");
    return doc;
}

template <typename T>
T require_field(const json& doc, const char* key) {
    if (!doc.contains(key))
        throw Error(ErrorCode::MalformedHeader, std::string("header missing field \"") + key + "\"");
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::MalformedHeader, std::string("header field \"") + key + "\" has wrong type");
    }
}

std::vector<char> read_payload(const fs::path& header_path, const std::string& rel,
                               std::size_t expected_bytes) {
    const fs::path payload_path = header_path.parent_path() / rel;
    if (!fs::exists(payload_path))
        throw Error(ErrorCode::MissingFile, "payload not found: " + payload_path.string());
    const auto actual = fs::file_size(payload_path);
    if (actual != expected_bytes)
        throw Error(ErrorCode::SizeMismatch,
                    "payload " + payload_path.string() + " has " + std::to_string(actual) +
                        " bytes, expected " + std::to_string(expected_bytes));
    std::vector<char> bytes(expected_bytes);
    std::ifstream in(payload_path, std::ios::binary);
    in.read(bytes.data(), static_cast<std::streamsize>(expected_bytes));
    if (!in)
        throw Error(ErrorCode::MissingFile, "short read on " + payload_path.string());
    return bytes;
}

void write_payload(const fs::path& header_path, const std::string& rel, const void* data,
                   std::size_t bytes) {
    const fs::path payload_path = header_path.parent_path() / rel;
    std::ofstream out(payload_path, std::ios::binary);
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

void check_layout(const json& doc, const char* dtype) {
    if (require_field<std::string>(doc, "dtype") != dtype)
        throw Error(ErrorCode::MalformedHeader, std::string("expected dtype \"") + dtype + "\"");
    if (require_field<std::string>(doc, "byte_order") != "little")
        throw Error(ErrorCode::MalformedHeader, "only little-endian payloads are supported");
}

}  // namespace

HsiCube load_cube(const fs::path& header_path) {
    const json doc = read_header(header_path);
    check_layout(doc, "f32");
    if (require_field<std::string>(doc, "order") != "bsq")
        throw Error(ErrorCode::MalformedHeader, "cube order must be \"bsq\"");

    HsiCube cube;
    cube.rows = require_field<std::size_t>(doc, "rows");
    cube.cols = require_field<std::size_t>(doc, "cols");
    cube.bands = require_field<std::size_t>(doc, "bands");
    cube.name = doc.value("name", header_path.stem().string());
    if (cube.rows < 1 || cube.cols < 1 || cube.bands < 1)
        throw Error(ErrorCode::MalformedHeader, "cube dimensions must be >= 1");

    const std::size_t count = cube.rows * cube.cols * cube.bands;
    const auto bytes = read_payload(header_path, require_field<std::string>(doc, "payload"),
                                    count * sizeof(float));
    cube.values.resize(count);
    std::memcpy(cube.values.data(), bytes.data(), bytes.size());
    for (float v : cube.values)
        if (!std::isfinite(v))
            throw Error(ErrorCode::NonFiniteValue, "cube contains NaN or infinite values");
    return cube;
}

void save_cube(const HsiCube& cube, const fs::path& header_path) {
    cube.validate();
    const std::string payload_rel = header_path.stem().string() + ".bin";
    json doc = {
        {"rows", cube.rows},     {"cols", cube.cols},           {"bands", cube.bands},
        {"dtype", "f32"},        {"order", "bsq"},              {"byte_order", "little"},
        {"payload", payload_rel}, {"name", cube.name},
    };
    std::ofstream out(header_path);
    out << doc.dump(2) << "\n";
    write_payload(header_path, payload_rel, cube.values.data(),
                  cube.values.size() * sizeof(float));
}

GroundTruth load_ground_truth(const fs::path& header_path) {
    const json doc = read_header(header_path);
    check_layout(doc, "u16");

    GroundTruth gt;
    gt.rows = require_field<std::size_t>(doc, "rows");
    gt.cols = require_field<std::size_t>(doc, "cols");
    gt.num_classes = require_field<std::size_t>(doc, "num_classes");
    if (gt.num_classes < 1)
        throw Error(ErrorCode::MalformedHeader, "num_classes must be >= 1");
    if (doc.contains("class_names")) {
        gt.class_names = doc.at("class_names").get<std::vector<std::string>>();
        if (gt.class_names.size() != gt.num_classes)
            throw Error(ErrorCode::MalformedHeader, "class_names length must equal num_classes");
    } else {
        for (std::size_t c = 1; c <= gt.num_classes; ++c)
            gt.class_names.push_back("class_" + std::to_string(c));
    }

    const std::size_t count = gt.rows * gt.cols;
    const auto bytes = read_payload(header_path, require_field<std::string>(doc, "payload"),
                                    count * sizeof(std::uint16_t));
    gt.labels.resize(count);
    std::memcpy(gt.labels.data(), bytes.data(), bytes.size());
    for (auto v : gt.labels)
        if (v > gt.num_classes)
            throw Error(ErrorCode::LabelOutOfRange,
                        "label " + std::to_string(v) + " exceeds num_classes " +
                            std::to_string(gt.num_classes));
    return gt;
}

void save_ground_truth(const GroundTruth& gt, const fs::path& header_path) {
    const std::string payload_rel = header_path.stem().string() + ".bin";
    json doc = {
        {"rows", gt.rows},
        {"cols", gt.cols},
        {"bands", 1},
        {"dtype", "u16"},
        {"byte_order", "little"},
        {"num_classes", gt.num_classes},
        {"class_names", gt.class_names},
        {"payload", payload_rel},
    };
    std::ofstream out(header_path);
    out << doc.dump(2) << "\n";
    write_payload(header_path, payload_rel, gt.labels.data(),
                  gt.labels.size() * sizeof(std::uint16_t));
}

}  // namespace hsic
