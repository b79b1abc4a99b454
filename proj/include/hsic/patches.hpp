#pragma once

#include <cstdint>
#include <vector>

#include "hsic/cube.hpp"
#include "hsic/rng.hpp"
#include "hsic/split.hpp"

namespace hsic {

/// A minibatch of P x P x k patches with their labels and source coordinates.
/// data layout is row-major [batch][row][col][band], i.e. batch x P x P x k x 1
/// with a trailing unit channel axis implied.
struct PatchBatch {
    std::size_t batch = 0;
    std::size_t patch_size = 0;  // P
    std::size_t bands = 0;       // k
    std::vector<float> data;
    std::vector<std::uint16_t> labels;  // values 1..Y
    std::vector<PixelCoord> coords;
};

// Mirror reflection about the edge, excluding the edge pixel itself
// (index -1 maps to +1, index n maps to n-2).
inline std::size_t reflect_index(long i, std::size_t n) {
    const long last = static_cast<long>(n) - 1;
    while (i < 0 || i > last) {
        if (i < 0) i = -i;
        if (i > last) i = 2 * last - i;
    }
    return static_cast<std::size_t>(i);
}

/// Window of half-width (P-1)/2 centered at (row, col); out-of-bounds
/// positions are filled by mirror reflection. Output layout [r][c][band].
std::vector<float> extract_patch(const HsiCube& cube, std::size_t row, std::size_t col,
                                 std::size_t patch_size);

/// Seeded minibatch iteration over one subset of a split. Each epoch covers
/// every subset pixel exactly once; the last batch may be short.
class BatchStream {
public:
    BatchStream(const HsiCube& cube, const SplitAssignment& split, Subset subset,
                std::size_t patch_size, std::size_t batch_size, std::uint64_t seed,
                bool shuffle);

    std::size_t sample_count() const { return coords_.size(); }
    std::size_t batch_count() const {
        return (coords_.size() + batch_size_ - 1) / batch_size_;
    }

    /// Reseeds the traversal order for the given epoch (no-op when not shuffling).
    void begin_epoch(std::size_t epoch);

    PatchBatch batch(std::size_t index, const GroundTruth& gt) const;

private:
    const HsiCube& cube_;
    std::size_t patch_size_;
    std::size_t batch_size_;
    std::uint64_t seed_;
    bool shuffle_;
    std::vector<PixelCoord> coords_;  // row-major base order
    std::vector<std::uint32_t> order_;
};

}  // namespace hsic
