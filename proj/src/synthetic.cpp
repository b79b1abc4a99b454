#include "hsic/synthetic.hpp"

#include <cmath>

#include "hsic/rng.hpp"

namespace hsic {

std::pair<HsiCube, GroundTruth> make_synthetic_scene(const SyntheticSpec& spec) {
    std::uint64_t mix = spec.seed;
    splitmix64(mix);
    Rng rng(mix ^ 0x5c31eull);

    const std::size_t grid =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(spec.num_classes))));
    auto region_class = [&](std::size_t r, std::size_t c) {
        const std::size_t gr = r * grid / spec.rows;
        const std::size_t gc = c * grid / spec.cols;
        return (gr * grid + gc) % spec.num_classes + 1;  // 1..Y
    };

    // Class spectra: unit-height Gaussian bumps spread across the band axis.
    std::vector<std::vector<double>> means(spec.num_classes,
                                           std::vector<double>(spec.bands, 0.0));
    const double width = static_cast<double>(spec.bands) / (3.0 * spec.num_classes);
    for (std::size_t y = 0; y < spec.num_classes; ++y) {
        const double center = (y + 0.5) * static_cast<double>(spec.bands) /
                              static_cast<double>(spec.num_classes);
        for (std::size_t b = 0; b < spec.bands; ++b) {
            const double d = (static_cast<double>(b) - center) / width;
            means[y][b] = std::exp(-0.5 * d * d);
        }
    }

    HsiCube cube;
    cube.rows = spec.rows;
    cube.cols = spec.cols;
    cube.bands = spec.bands;
    cube.name = "synthetic";
    cube.values.assign(spec.rows * spec.cols * spec.bands, 0.0f);
    for (std::size_t r = 0; r < spec.rows; ++r)
        for (std::size_t c = 0; c < spec.cols; ++c) {
            const std::size_t cls = region_class(r, c) - 1;
            for (std::size_t b = 0; b < spec.bands; ++b)
                cube.at(r, c, b) = static_cast<float>(
                    means[cls][b] + spec.noise_sigma * rng.next_gaussian());
        }

    GroundTruth gt;
    gt.rows = spec.rows;
    gt.cols = spec.cols;
    gt.num_classes = spec.num_classes;
    for (std::size_t y = 1; y <= spec.num_classes; ++y)
        gt.class_names.push_back("synth_" + std::to_string(y));
    gt.labels.assign(spec.rows * spec.cols, 0);

    // Draw labeled_per_class pixels per class via a per-class shuffle.
    std::vector<std::vector<std::size_t>> per_class(spec.num_classes);
    for (std::size_t r = 0; r < spec.rows; ++r)
        for (std::size_t c = 0; c < spec.cols; ++c)
            per_class[region_class(r, c) - 1].push_back(r * spec.cols + c);
    for (std::size_t y = 0; y < spec.num_classes; ++y) {
        seeded_shuffle(per_class[y], rng);
        const std::size_t n = std::min(spec.labeled_per_class, per_class[y].size());
        for (std::size_t i = 0; i < n; ++i)
            gt.labels[per_class[y][i]] = static_cast<std::uint16_t>(y + 1);
    }

    if (spec.label_noise > 0.0) {
        for (auto& label : gt.labels) {
            if (label == 0 || rng.next_double() >= spec.label_noise) continue;
            // Replace with a uniformly drawn different class.
            const auto offset = 1 + rng.next_below(spec.num_classes - 1);
            label = static_cast<std::uint16_t>((label - 1 + offset) % spec.num_classes + 1);
        }
    }
    return {std::move(cube), std::move(gt)};
}

}  // namespace hsic
