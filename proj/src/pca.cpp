#include "hsic/pca.hpp"

#include <cmath>
#include <fstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace hsic {

HsiCube standardize_bands(const HsiCube& cube) {
    cube.validate();
    HsiCube out = cube;
    const std::size_t pixels = cube.pixel_count();
    for (std::size_t b = 0; b < cube.bands; ++b) {
        double sum = 0.0, sum_sq = 0.0;
        const float* band = cube.values.data() + b * pixels;
        for (std::size_t i = 0; i < pixels; ++i) {
            sum += band[i];
            sum_sq += static_cast<double>(band[i]) * band[i];
        }
        const double mean = sum / static_cast<double>(pixels);
        const double var = sum_sq / static_cast<double>(pixels) - mean * mean;
        float* dst = out.values.data() + b * pixels;
        if (var <= 0.0) {
            for (std::size_t i = 0; i < pixels; ++i) dst[i] = 0.0f;
        } else {
            const double inv_std = 1.0 / std::sqrt(var);
            for (std::size_t i = 0; i < pixels; ++i)
                dst[i] = static_cast<float>((band[i] - mean) * inv_std);
        }
    }
    return out;
}

PcaModel fit_pca(const HsiCube& cube, std::size_t k) {
    cube.validate();
    const std::size_t bands = cube.bands;
    if (k < 1 || k > bands)
        throw Error(ErrorCode::KTooLarge, "k must be in [1, bands]");

    const std::size_t pixels = cube.pixel_count();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(bands));
    for (std::size_t b = 0; b < bands; ++b) {
        const float* band = cube.values.data() + b * pixels;
        double sum = 0.0;
        for (std::size_t i = 0; i < pixels; ++i) sum += band[i];
        mean[static_cast<Eigen::Index>(b)] = sum / static_cast<double>(pixels);
    }

    // Population covariance of the band spectra, accumulated in double.
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(bands),
                                                static_cast<Eigen::Index>(bands));
    for (std::size_t a = 0; a < bands; ++a) {
        const float* ba = cube.values.data() + a * pixels;
        for (std::size_t b = a; b < bands; ++b) {
            const float* bb = cube.values.data() + b * pixels;
            double acc = 0.0;
            for (std::size_t i = 0; i < pixels; ++i)
                acc += (ba[i] - mean[static_cast<Eigen::Index>(a)]) *
                       (bb[i] - mean[static_cast<Eigen::Index>(b)]);
            const double c = acc / static_cast<double>(pixels);
            cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = c;
            cov(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = c;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    // Eigen returns ascending eigenvalues; take the top k from the back.
    PcaModel model;
    model.bands = bands;
    model.k = k;
    model.mean.assign(mean.data(), mean.data() + bands);
    model.components.resize(k * bands);
    model.explained_variance.resize(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto src = static_cast<Eigen::Index>(bands - 1 - i);
        model.explained_variance[i] = std::max(0.0, solver.eigenvalues()[src]);
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        // Sign rule: largest-magnitude entry positive, ties to the lowest index.
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index b = 0; b < v.size(); ++b)
            if (std::abs(v[b]) > best) {
                best = std::abs(v[b]);
                arg = b;
            }
        if (v[arg] < 0.0) v = -v;
        for (std::size_t b = 0; b < bands; ++b)
            model.components[i * bands + b] = v[static_cast<Eigen::Index>(b)];
    }
    return model;
}

HsiCube apply_pca(const HsiCube& cube, const PcaModel& model) {
    cube.validate();
    if (cube.bands != model.bands)
        throw Error(ErrorCode::DimensionMismatch, "cube band count does not match PCA model");

    HsiCube out;
    out.rows = cube.rows;
    out.cols = cube.cols;
    out.bands = model.k;
    out.name = cube.name;
    const std::size_t pixels = cube.pixel_count();
    out.values.assign(pixels * model.k, 0.0f);
    for (std::size_t i = 0; i < model.k; ++i) {
        float* dst = out.values.data() + i * pixels;
        for (std::size_t b = 0; b < model.bands; ++b) {
            const float* band = cube.values.data() + b * pixels;
            const double w = model.component(i, b);
            const double m = model.mean[b];
            for (std::size_t p = 0; p < pixels; ++p)
                dst[p] += static_cast<float>(w * (band[p] - m));
        }
    }
    return out;
}

void save_pca_model(const PcaModel& model, const std::filesystem::path& header_path) {
    const std::string payload_rel = header_path.stem().string() + ".bin";
    nlohmann::json doc = {
        {"k", model.k}, {"bands", model.bands}, {"dtype", "f64"},
        {"byte_order", "little"}, {"payload", payload_rel},
    };
    std::ofstream out(header_path);
    out << doc.dump(2) << "\n";
    std::ofstream payload(header_path.parent_path() / payload_rel, std::ios::binary);
    auto write = [&payload](const std::vector<double>& v) {
        payload.write(reinterpret_cast<const char*>(v.data()),
                      static_cast<std::streamsize>(v.size() * sizeof(double)));
    };
    write(model.mean);
    write(model.components);
    write(model.explained_variance);
}

PcaModel load_pca_model(const std::filesystem::path& header_path) {
    if (!std::filesystem::exists(header_path))
        throw Error(ErrorCode::MissingFile, "PCA model not found: " + header_path.string());
    std::ifstream in(header_path);
    nlohmann::json doc;
    in >> doc;
    PcaModel model;
    model.k = doc.at("k").get<std::size_t>();
    model.bands = doc.at("bands").get<std::size_t>();
    const auto payload_path = header_path.parent_path() / doc.at("payload").get<std::string>();
    const std::size_t expected =
        (model.bands + model.k * model.bands + model.k) * sizeof(double);
    if (!std::filesystem::exists(payload_path) ||
        std::filesystem::file_size(payload_path) != expected)
        throw Error(ErrorCode::SizeMismatch, "PCA payload size mismatch");
    std::ifstream payload(payload_path, std::ios::binary);
    auto read = [&payload](std::vector<double>& v, std::size_t n) {
        v.resize(n);
        payload.read(reinterpret_cast<char*>(v.data()),
                     static_cast<std::streamsize>(n * sizeof(double)));
    };
    read(model.mean, model.bands);
    read(model.components, model.k * model.bands);
    read(model.explained_variance, model.k);
    return model;
}

}  // namespace hsic
