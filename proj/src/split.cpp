#include "hsic/split.hpp"

#include <cmath>
#include <fstream>

#include "hsic/rng.hpp"

namespace hsic {

const char* subset_name(Subset s) {
    switch (s) {
        case Subset::Train: return "train";
        case Subset::Val: return "val";
        case Subset::Test: return "test";
    }
    return "?";
}

std::vector<PixelCoord> SplitAssignment::coords_of(Subset s) const {
    std::vector<PixelCoord> out;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            if (subset_of[r * cols + c] == static_cast<std::uint8_t>(s))
                out.push_back({static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)});
    return out;
}

SplitCounts split_counts(std::size_t class_size, const std::array<double, 3>& ratios) {
    SplitCounts counts;
    counts.train = static_cast<std::size_t>(std::floor(static_cast<double>(class_size) * ratios[0]));
    const auto val_ceil =
        static_cast<std::size_t>(std::ceil(static_cast<double>(class_size) * ratios[1]));
    counts.val = (counts.train + val_ceil <= class_size)
                     ? val_ceil
                     : static_cast<std::size_t>(
                           std::floor(static_cast<double>(class_size) * ratios[1]));
    counts.test = class_size - counts.train - counts.val;
    return counts;
}

std::vector<std::pair<std::size_t, std::size_t>> class_histogram(const GroundTruth& gt) {
    std::vector<std::pair<std::size_t, std::size_t>> hist;
    for (std::size_t c = 1; c <= gt.num_classes; ++c) hist.emplace_back(c, 0);
    for (auto v : gt.labels)
        if (v != 0) ++hist[v - 1].second;
    return hist;
}

SplitAssignment stratified_split(const GroundTruth& gt, const std::array<double, 3>& ratios,
                                 std::uint64_t seed) {
    for (double r : ratios)
        if (!(r >= 0.0) || !std::isfinite(r))
            throw Error(ErrorCode::BadRatios, "ratios must be non-negative");
    if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
        throw Error(ErrorCode::BadRatios, "ratios must sum to 1");

    std::vector<std::vector<PixelCoord>> per_class(gt.num_classes);
    for (std::size_t r = 0; r < gt.rows; ++r)
        for (std::size_t c = 0; c < gt.cols; ++c) {
            const auto label = gt.at(r, c);
            if (label != 0)
                per_class[label - 1].push_back(
                    {static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)});
        }
    for (std::size_t c = 0; c < gt.num_classes; ++c)
        if (per_class[c].empty())
            throw Error(ErrorCode::EmptyClass, "class " + std::to_string(c + 1) + " has no pixels");

    SplitAssignment split;
    split.rows = gt.rows;
    split.cols = gt.cols;
    split.seed = seed;
    split.ratios = ratios;
    split.subset_of.assign(gt.rows * gt.cols, SplitAssignment::kUnassigned);

    // One stream per class, derived from (seed, class id), so the draw for a
    // class does not depend on the sizes of the classes before it.
    for (std::size_t c = 0; c < gt.num_classes; ++c) {
        auto& coords = per_class[c];
        std::uint64_t mix = seed;
        splitmix64(mix);
        Rng rng(mix ^ (0xc1a55u * (c + 1)));
        seeded_shuffle(coords, rng);
        const SplitCounts counts = split_counts(coords.size(), ratios);
        for (std::size_t i = 0; i < coords.size(); ++i) {
            const Subset s = i < counts.train                ? Subset::Train
                             : i < counts.train + counts.val ? Subset::Val
                                                             : Subset::Test;
            split.subset_of[coords[i].row * split.cols + coords[i].col] =
                static_cast<std::uint8_t>(s);
        }
    }
    return split;
}

void save_split(const SplitAssignment& split, const std::filesystem::path& path) {
    std::ofstream out(path);
    for (std::size_t r = 0; r < split.rows; ++r)
        for (std::size_t c = 0; c < split.cols; ++c) {
            const auto v = split.subset_of[r * split.cols + c];
            if (v != SplitAssignment::kUnassigned)
                out << r << "," << c << "," << subset_name(static_cast<Subset>(v)) << "\n";
        }
}

}  // namespace hsic
