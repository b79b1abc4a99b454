#include "hsic/metrics.hpp"

#include <cmath>
#include <fstream>

namespace hsic {

ConfusionMatrix confusion(const std::vector<std::uint16_t>& preds,
                          const std::vector<std::uint16_t>& truths, std::size_t num_classes) {
    if (preds.size() != truths.size())
        throw Error(ErrorCode::LengthMismatch, "confusion: preds/truths length mismatch");
    ConfusionMatrix c;
    c.num_classes = num_classes;
    c.counts.assign(num_classes * num_classes, 0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] < 1 || preds[i] > num_classes || truths[i] < 1 || truths[i] > num_classes)
            throw Error(ErrorCode::LabelOutOfRange, "confusion: class id outside 1..Y");
        c.counts[(truths[i] - 1) * num_classes + (preds[i] - 1)] += 1;
    }
    return c;
}

double overall_accuracy(const ConfusionMatrix& c) {
    const std::uint64_t total = c.total();
    if (total == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix is empty");
    std::uint64_t trace = 0;
    for (std::size_t i = 1; i <= c.num_classes; ++i) trace += c.at(i, i);
    return static_cast<double>(trace) / static_cast<double>(total);
}

std::vector<double> per_class_accuracy(const ConfusionMatrix& c) {
    std::vector<double> acc(c.num_classes, 0.0);
    for (std::size_t t = 1; t <= c.num_classes; ++t) {
        std::uint64_t row_sum = 0;
        for (std::size_t p = 1; p <= c.num_classes; ++p) row_sum += c.at(t, p);
        acc[t - 1] = row_sum == 0 ? 0.0
                                  : static_cast<double>(c.at(t, t)) /
                                        static_cast<double>(row_sum);
    }
    return acc;
}

double average_accuracy(const ConfusionMatrix& c) {
    if (c.total() == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix is empty");
    double sum = 0.0;
    std::size_t populated = 0;
    for (std::size_t t = 1; t <= c.num_classes; ++t) {
        std::uint64_t row_sum = 0;
        for (std::size_t p = 1; p <= c.num_classes; ++p) row_sum += c.at(t, p);
        if (row_sum == 0) continue;  // no true samples of this class
        sum += static_cast<double>(c.at(t, t)) / static_cast<double>(row_sum);
        ++populated;
    }
    return sum / static_cast<double>(populated);
}

double kappa(const ConfusionMatrix& c) {
    const double total = static_cast<double>(c.total());
    if (total == 0.0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix is empty");
    double trace = 0.0, pe = 0.0;
    for (std::size_t i = 1; i <= c.num_classes; ++i) {
        trace += static_cast<double>(c.at(i, i));
        std::uint64_t row_sum = 0, col_sum = 0;
        for (std::size_t j = 1; j <= c.num_classes; ++j) {
            row_sum += c.at(i, j);
            col_sum += c.at(j, i);
        }
        pe += (static_cast<double>(row_sum) / total) * (static_cast<double>(col_sum) / total);
    }
    const double po = trace / total;
    if (std::abs(1.0 - pe) < 1e-15)
        throw Error(ErrorCode::DegenerateMarginals, "kappa undefined: chance agreement is 1");
    return (po - pe) / (1.0 - pe);
}

std::vector<std::uint16_t> render_class_map(const std::vector<PixelCoord>& coords,
                                            const std::vector<std::uint16_t>& predictions,
                                            std::size_t rows, std::size_t cols) {
    if (coords.size() != predictions.size())
        throw Error(ErrorCode::LengthMismatch, "render_class_map length mismatch");
    std::vector<std::uint16_t> map(rows * cols, 0);
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (coords[i].row >= rows || coords[i].col >= cols)
            throw Error(ErrorCode::CoordinateOutOfRange, "prediction outside the raster");
        map[coords[i].row * cols + coords[i].col] = predictions[i];
    }
    return map;
}

void write_pgm(const std::vector<std::uint16_t>& classes, std::size_t rows, std::size_t cols,
               std::size_t num_classes, const std::filesystem::path& path) {
    if (classes.size() != rows * cols)
        throw Error(ErrorCode::LengthMismatch, "pgm raster size mismatch");
    std::ofstream out(path, std::ios::binary);
    out << "P5\n" << cols << " " << rows << "\n" << num_classes << "\n";
    if (num_classes < 256) {
        std::vector<std::uint8_t> bytes(classes.begin(), classes.end());
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    } else {
        // 16-bit PGM samples are big-endian.
        for (auto v : classes) {
            const char hi = static_cast<char>(v >> 8), lo = static_cast<char>(v & 0xff);
            out.write(&hi, 1);
            out.write(&lo, 1);
        }
    }
}

void write_ppm(const std::vector<std::uint16_t>& classes, std::size_t rows, std::size_t cols,
               const std::filesystem::path& path) {
    if (classes.size() != rows * cols)
        throw Error(ErrorCode::LengthMismatch, "ppm raster size mismatch");
    // 0 renders black; class colors cycle through a fixed 20-entry palette.
    static constexpr std::uint8_t palette[20][3] = {
        {230, 25, 75},  {60, 180, 75},   {255, 225, 25}, {0, 130, 200},  {245, 130, 48},
        {145, 30, 180}, {70, 240, 240},  {240, 50, 230}, {210, 245, 60}, {250, 190, 212},
        {0, 128, 128},  {220, 190, 255}, {170, 110, 40}, {255, 250, 200}, {128, 0, 0},
        {170, 255, 195}, {128, 128, 0},  {255, 215, 180}, {0, 0, 128},   {128, 128, 128}};
    std::ofstream out(path, std::ios::binary);
    out << "P6\n" << cols << " " << rows << "\n255\n";
    for (auto v : classes) {
        std::uint8_t rgb[3] = {0, 0, 0};
        if (v != 0) {
            const auto& p = palette[(v - 1) % 20];
            rgb[0] = p[0];
            rgb[1] = p[1];
            rgb[2] = p[2];
        }
        out.write(reinterpret_cast<const char*>(rgb), 3);
    }
}

}  // namespace hsic
