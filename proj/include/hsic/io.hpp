#pragma once

#include <filesystem>
#include <string>

#include "hsic/cube.hpp"

namespace hsic {

// Raw-binary container: a JSON header next to a little-endian payload file.
// Cube payload is 32-bit IEEE-754 floats in BSQ order; ground-truth payload
// is row-major unsigned 16-bit labels.

HsiCube load_cube(const std::filesystem::path& header_path);
void save_cube(const HsiCube& cube, const std::filesystem::path& header_path);

GroundTruth load_ground_truth(const std::filesystem::path& header_path);
void save_ground_truth(const GroundTruth& gt, const std::filesystem::path& header_path);

}  // namespace hsic
