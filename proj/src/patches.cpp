#include "hsic/patches.hpp"

#include <numeric>

namespace hsic {

std::vector<float> extract_patch(const HsiCube& cube, std::size_t row, std::size_t col,
                                 std::size_t patch_size) {
    if (row >= cube.rows || col >= cube.cols)
        throw Error(ErrorCode::CoordinateOutOfRange, "patch center outside the raster");
    if (patch_size % 2 == 0 || patch_size == 0)
        throw Error(ErrorCode::EvenPatch, "patch size must be odd");

    const long half = static_cast<long>(patch_size) / 2;
    std::vector<float> patch(patch_size * patch_size * cube.bands);
    std::size_t idx = 0;
    for (long dr = -half; dr <= half; ++dr) {
        const std::size_t r = reflect_index(static_cast<long>(row) + dr, cube.rows);
        for (long dc = -half; dc <= half; ++dc) {
            const std::size_t c = reflect_index(static_cast<long>(col) + dc, cube.cols);
            for (std::size_t b = 0; b < cube.bands; ++b) patch[idx++] = cube.at(r, c, b);
        }
    }
    return patch;
}

BatchStream::BatchStream(const HsiCube& cube, const SplitAssignment& split, Subset subset,
                         std::size_t patch_size, std::size_t batch_size, std::uint64_t seed,
                         bool shuffle)
    : cube_(cube),
      patch_size_(patch_size),
      batch_size_(batch_size),
      seed_(seed),
      shuffle_(shuffle),
      coords_(split.coords_of(subset)) {
    if (coords_.empty())
        throw Error(ErrorCode::EmptySubset,
                    std::string("subset \"") + subset_name(subset) + "\" is empty");
    order_.resize(coords_.size());
    std::iota(order_.begin(), order_.end(), 0u);
}

void BatchStream::begin_epoch(std::size_t epoch) {
    std::iota(order_.begin(), order_.end(), 0u);
    if (shuffle_) {
        std::uint64_t mix = seed_;
        splitmix64(mix);
        Rng rng(mix ^ (0xba7c4u + epoch));
        seeded_shuffle(order_, rng);
    }
}

PatchBatch BatchStream::batch(std::size_t index, const GroundTruth& gt) const {
    const std::size_t begin = index * batch_size_;
    const std::size_t end = std::min(begin + batch_size_, coords_.size());

    PatchBatch out;
    out.batch = end - begin;
    out.patch_size = patch_size_;
    out.bands = cube_.bands;
    out.data.reserve(out.batch * patch_size_ * patch_size_ * cube_.bands);
    for (std::size_t i = begin; i < end; ++i) {
        const PixelCoord p = coords_[order_[i]];
        const auto patch = extract_patch(cube_, p.row, p.col, patch_size_);
        out.data.insert(out.data.end(), patch.begin(), patch.end());
        out.labels.push_back(gt.at(p.row, p.col));
        out.coords.push_back(p);
    }
    return out;
}

}  // namespace hsic
