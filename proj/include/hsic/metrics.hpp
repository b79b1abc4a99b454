#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "hsic/cube.hpp"

namespace hsic {

/// Y x Y counts, rows = true class, cols = predicted class (both 1-based ids).
struct ConfusionMatrix {
    std::size_t num_classes = 0;
    std::vector<std::uint64_t> counts;  // row-major

    std::uint64_t at(std::size_t truth, std::size_t pred) const {
        return counts[(truth - 1) * num_classes + (pred - 1)];
    }
    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (auto c : counts) n += c;
        return n;
    }
};

ConfusionMatrix confusion(const std::vector<std::uint16_t>& preds,
                          const std::vector<std::uint16_t>& truths, std::size_t num_classes);

/// Correctly classified over total: trace / total.
double overall_accuracy(const ConfusionMatrix& c);

/// Mean of per-class recalls, skipping classes with no true samples.
double average_accuracy(const ConfusionMatrix& c);

std::vector<double> per_class_accuracy(const ConfusionMatrix& c);

/// Chance-corrected agreement (P_o - P_e) / (1 - P_e) with the multiclass
/// marginal-product P_e; reduces to the binary P+ + P- form when Y = 2.
double kappa(const ConfusionMatrix& c);

struct ReliabilityBins {
    std::vector<double> edges;        // num_bins + 1 strictly increasing edges over [0, 1]
    std::vector<std::size_t> counts;  // per-bin sample counts
    std::vector<double> mean_confidence;
    std::vector<double> accuracy;
};

/// Expected calibration error over equal-width confidence bins on (0, 1].
template <typename T>
std::pair<double, ReliabilityBins> ece(const std::vector<T>& probs,
                                       const std::vector<std::uint16_t>& truths,
                                       std::size_t num_classes, std::size_t num_bins = 15);

/// Class-index raster as a binary portable graymap (P5, maxval = Y).
void write_pgm(const std::vector<std::uint16_t>& classes, std::size_t rows, std::size_t cols,
               std::size_t num_classes, const std::filesystem::path& path);

/// Fixed-palette color rendering (P6).
void write_ppm(const std::vector<std::uint16_t>& classes, std::size_t rows, std::size_t cols,
               const std::filesystem::path& path);

/// Prediction raster over the whole scene: predicted class at evaluated
/// coordinates, 0 elsewhere.
std::vector<std::uint16_t> render_class_map(const std::vector<PixelCoord>& coords,
                                            const std::vector<std::uint16_t>& predictions,
                                            std::size_t rows, std::size_t cols);

// --- implementation of the templated piece ---

template <typename T>
std::pair<double, ReliabilityBins> ece(const std::vector<T>& probs,
                                       const std::vector<std::uint16_t>& truths,
                                       std::size_t num_classes, std::size_t num_bins) {
    if (probs.size() != truths.size() * num_classes)
        throw Error(ErrorCode::LengthMismatch, "ece: probs/truths length mismatch");
    const std::size_t n = truths.size();

    ReliabilityBins bins;
    bins.edges.resize(num_bins + 1);
    for (std::size_t b = 0; b <= num_bins; ++b)
        bins.edges[b] = static_cast<double>(b) / static_cast<double>(num_bins);
    bins.counts.assign(num_bins, 0);
    bins.mean_confidence.assign(num_bins, 0.0);
    bins.accuracy.assign(num_bins, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        const T* row = probs.data() + i * num_classes;
        std::size_t best = 0;
        for (std::size_t y = 1; y < num_classes; ++y)
            if (row[y] > row[best]) best = y;
        const double conf = row[best];
        // Bins are half-open on the left, so confidence 1.0 lands in the top bin.
        std::size_t b = conf <= 0.0 ? 0
                                    : static_cast<std::size_t>(
                                          std::ceil(conf * static_cast<double>(num_bins))) -
                                          1;
        b = std::min(b, num_bins - 1);
        bins.counts[b] += 1;
        bins.mean_confidence[b] += conf;
        bins.accuracy[b] += (best + 1 == truths[i]) ? 1.0 : 0.0;
    }

    double total = 0.0;
    for (std::size_t b = 0; b < num_bins; ++b) {
        if (bins.counts[b] == 0) continue;
        bins.mean_confidence[b] /= static_cast<double>(bins.counts[b]);
        bins.accuracy[b] /= static_cast<double>(bins.counts[b]);
        total += (static_cast<double>(bins.counts[b]) / static_cast<double>(n)) *
                 std::abs(bins.accuracy[b] - bins.mean_confidence[b]);
    }
    return {total, bins};
}

}  // namespace hsic
