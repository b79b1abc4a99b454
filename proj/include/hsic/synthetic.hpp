#pragma once

#include "hsic/cube.hpp"

namespace hsic {

struct SyntheticSpec {
    std::size_t rows = 32;
    std::size_t cols = 32;
    std::size_t bands = 30;
    std::size_t num_classes = 4;
    std::size_t labeled_per_class = 75;
    double noise_sigma = 0.6;       // per-band white noise on top of unit-height bumps
    double label_noise = 0.0;       // fraction of labeled pixels given a wrong class
    std::uint64_t seed = 7;
};

/// A scene of Gaussian spectral bumps: each class has a bump centered at a
/// class-specific band, pixels carry the bump of their spatial region plus
/// white noise. Labels mark a random subset of each region's pixels.
std::pair<HsiCube, GroundTruth> make_synthetic_scene(const SyntheticSpec& spec);

}  // namespace hsic
