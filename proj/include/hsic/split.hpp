#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "hsic/cube.hpp"

namespace hsic {

enum class Subset : std::uint8_t { Train = 0, Val = 1, Test = 2 };

const char* subset_name(Subset s);

/// Deterministic per-class partition of the labeled pixels.
struct SplitAssignment {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::uint64_t seed = 0;
    std::array<double, 3> ratios{};
    // Row-major over the raster; entries for unlabeled pixels are unused.
    std::vector<std::uint8_t> subset_of;  // values from Subset, 255 = unlabeled
    static constexpr std::uint8_t kUnassigned = 255;

    bool contains(PixelCoord p) const {
        return subset_of[p.row * cols + p.col] != kUnassigned;
    }
    Subset at(PixelCoord p) const {
        return static_cast<Subset>(subset_of[p.row * cols + p.col]);
    }

    std::vector<PixelCoord> coords_of(Subset s) const;
};

/// Per-class counts for train/val/test under the floor/ceil/remainder rule.
struct SplitCounts {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
    friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

/// train = floor(n*r_train); val = ceil(n*r_val) when that still fits,
/// else floor(n*r_val); test = remainder.
SplitCounts split_counts(std::size_t class_size, const std::array<double, 3>& ratios);

std::vector<std::pair<std::size_t, std::size_t>> class_histogram(const GroundTruth& gt);

SplitAssignment stratified_split(const GroundTruth& gt, const std::array<double, 3>& ratios,
                                 std::uint64_t seed);

/// Text export, one "row,col,subset" line per labeled pixel.
void save_split(const SplitAssignment& split, const std::filesystem::path& path);

}  // namespace hsic
