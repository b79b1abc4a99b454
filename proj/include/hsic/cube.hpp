#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hsic/errors.hpp"

namespace hsic {

/// A hyperspectral scene: rows x cols x bands of 32-bit reflectance values,
/// stored band-sequential (band 0's full row-major plane, then band 1, ...).
struct HsiCube {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t bands = 0;
    std::vector<float> values;  // size rows*cols*bands, BSQ order
    std::string name;

    float at(std::size_t r, std::size_t c, std::size_t b) const {
        return values[(b * rows + r) * cols + c];
    }
    float& at(std::size_t r, std::size_t c, std::size_t b) {
        return values[(b * rows + r) * cols + c];
    }

    std::size_t pixel_count() const { return rows * cols; }

    void validate() const {
        if (rows < 1 || cols < 1 || bands < 1)
            throw Error(ErrorCode::MalformedHeader, "cube dimensions must be >= 1");
        if (values.size() != rows * cols * bands)
            throw Error(ErrorCode::SizeMismatch, "cube value count does not match dimensions");
    }
};

/// Per-pixel class labels; 0 means unlabeled and never enters training or metrics.
struct GroundTruth {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint16_t> labels;  // row-major, size rows*cols
    std::size_t num_classes = 0;        // classes are 1..num_classes
    std::vector<std::string> class_names;

    std::uint16_t at(std::size_t r, std::size_t c) const { return labels[r * cols + c]; }

    std::size_t labeled_count() const {
        std::size_t n = 0;
        for (auto v : labels) n += (v != 0);
        return n;
    }
};

struct PixelCoord {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
    friend auto operator<=>(const PixelCoord&, const PixelCoord&) = default;
};

}  // namespace hsic
