#pragma once

#include <array>
#include <filesystem>
#include <string>

namespace hsic {

/// Full experiment description; defaults follow the reference protocol
/// (k = 15, P = 15, 25/25/50 split, 50 epochs, batch 256, lr 0.001).
struct ExperimentConfig {
    std::string cube_header;
    std::string gt_header;
    std::string out_dir = "out";
    std::size_t num_components = 15;
    std::size_t patch_size = 15;
    std::array<double, 3> ratios{0.25, 0.25, 0.5};
    double epsilon = 0.1;
    std::size_t epochs = 50;
    std::size_t batch_size = 256;
    double learning_rate = 0.001;
    double dropout = 0.0;
    std::uint64_t seed = 0;
    std::string precision = "f32";  // "f32" | "f64"
    bool pca_fit_train_only = false;
    bool hard_targets = false;
    bool deterministic = false;

    void validate() const;

    /// Stable hash of every training-relevant field, recorded in the manifest
    /// so eval can refuse a mismatched checkpoint.
    std::string config_hash() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

}  // namespace hsic
