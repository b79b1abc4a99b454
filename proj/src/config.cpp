#include "hsic/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hsic/errors.hpp"

namespace hsic {

using nlohmann::json;

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw Error(ErrorCode::ConfigError, "config field \"" + field + "\": " + why);
    };
    if (cube_header.empty()) fail("cube", "missing");
    if (gt_header.empty()) fail("ground_truth", "missing");
    if (num_components < 1) fail("num_components", "must be >= 1");
    if (patch_size < 1 || patch_size % 2 == 0) fail("patch_size", "must be odd and >= 1");
    double ratio_sum = 0.0;
    for (double r : ratios) {
        if (!(r >= 0.0)) fail("ratios", "entries must be non-negative");
        ratio_sum += r;
    }
    if (std::abs(ratio_sum - 1.0) > 1e-9) fail("ratios", "must sum to 1");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail("epsilon", "must lie in [0, 1]");
    if (epochs < 1) fail("epochs", "must be >= 1");
    if (batch_size < 1) fail("batch_size", "must be >= 1");
    if (!(learning_rate > 0.0)) fail("learning_rate", "must be > 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout", "must lie in [0, 1)");
    if (precision != "f32" && precision != "f64") fail("precision", "must be \"f32\" or \"f64\"");
}

namespace {

json to_json(const ExperimentConfig& c) {
    return json{
        {"cube", c.cube_header},
        {"ground_truth", c.gt_header},
        {"out_dir", c.out_dir},
        {"num_components", c.num_components},
        {"patch_size", c.patch_size},
        {"ratios", c.ratios},
        {"epsilon", c.epsilon},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"learning_rate", c.learning_rate},
        {"dropout", c.dropout},
        {"seed", c.seed},
        {"precision", c.precision},
        {"pca_fit_train_only", c.pca_fit_train_only},
        {"hard_targets", c.hard_targets},
        {"deterministic", c.deterministic},
    };
}

}  // namespace

std::string ExperimentConfig::config_hash() const {
    // FNV-1a over the canonical JSON form; stable across runs and platforms.
    const std::string repr = to_json(*this).dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : repr) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    std::ostringstream out;
    out << std::hex << h;
    return out.str();
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw Error(ErrorCode::ConfigError, "config file not found: " + path.string());
    std::ifstream in(path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, std::string("config parse error: ") + e.what());
    }

    ExperimentConfig c;
    try {
        c.cube_header = doc.value("cube", c.cube_header);
        c.gt_header = doc.value("ground_truth", c.gt_header);
        c.out_dir = doc.value("out_dir", c.out_dir);
        c.num_components = doc.value("num_components", c.num_components);
        c.patch_size = doc.value("patch_size", c.patch_size);
        if (doc.contains("ratios")) c.ratios = doc.at("ratios").get<std::array<double, 3>>();
        c.epsilon = doc.value("epsilon", c.epsilon);
        c.epochs = doc.value("epochs", c.epochs);
        c.batch_size = doc.value("batch_size", c.batch_size);
        c.learning_rate = doc.value("learning_rate", c.learning_rate);
        c.dropout = doc.value("dropout", c.dropout);
        c.seed = doc.value("seed", c.seed);
        c.precision = doc.value("precision", c.precision);
        c.pca_fit_train_only = doc.value("pca_fit_train_only", c.pca_fit_train_only);
        c.hard_targets = doc.value("hard_targets", c.hard_targets);
        c.deterministic = doc.value("deterministic", c.deterministic);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ConfigError, std::string("config field error: ") + e.what());
    }

    // Paths in the config resolve relative to the config file's directory.
    const auto base = path.parent_path();
    auto resolve = [&base](std::string& p) {
        if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).string();
    };
    resolve(c.cube_header);
    resolve(c.gt_header);
    c.validate();
    return c;
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path);
    out << to_json(config).dump(2) << "\n";
}

}  // namespace hsic
