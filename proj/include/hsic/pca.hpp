#pragma once

#include <filesystem>
#include <vector>

#include "hsic/cube.hpp"

namespace hsic {

/// Top-k principal directions of the band covariance, rows orthonormal,
/// ordered by descending eigenvalue. Sign convention: the largest-magnitude
/// entry of each component is positive (ties broken toward the lowest index).
struct PcaModel {
    std::size_t bands = 0;  // input band count B*
    std::size_t k = 0;
    std::vector<double> mean;                // length bands
    std::vector<double> components;          // k x bands, row-major
    std::vector<double> explained_variance;  // length k, non-increasing

    double component(std::size_t i, std::size_t b) const { return components[i * bands + b]; }
};

/// Rescales every band to mean 0, population variance 1 over all pixels.
/// A zero-variance band maps to all zeros.
HsiCube standardize_bands(const HsiCube& cube);

PcaModel fit_pca(const HsiCube& cube, std::size_t k);
HsiCube apply_pca(const HsiCube& cube, const PcaModel& model);

void save_pca_model(const PcaModel& model, const std::filesystem::path& header_path);
PcaModel load_pca_model(const std::filesystem::path& header_path);

}  // namespace hsic
