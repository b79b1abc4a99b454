#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hsic/patches.hpp"
#include "hsic/pca.hpp"
#include "hsic/split.hpp"
#include "test_util.hpp"

using namespace hsic;

namespace {

// Independent eigensolver oracle: power iteration with deflation on the
// band covariance, computed straight from the definition.
struct EigenPair {
    double value;
    std::vector<double> vector;
};

std::vector<std::vector<double>> covariance_of(const HsiCube& cube) {
    const std::size_t bands = cube.bands, pixels = cube.pixel_count();
    std::vector<double> mean(bands, 0.0);
    for (std::size_t b = 0; b < bands; ++b) {
        for (std::size_t p = 0; p < pixels; ++p) mean[b] += cube.values[b * pixels + p];
        mean[b] /= static_cast<double>(pixels);
    }
    std::vector<std::vector<double>> cov(bands, std::vector<double>(bands, 0.0));
    for (std::size_t a = 0; a < bands; ++a)
        for (std::size_t b = 0; b < bands; ++b) {
            double acc = 0.0;
            for (std::size_t p = 0; p < pixels; ++p)
                acc += (cube.values[a * pixels + p] - mean[a]) *
                       (cube.values[b * pixels + p] - mean[b]);
            cov[a][b] = acc / static_cast<double>(pixels);
        }
    return cov;
}

std::vector<EigenPair> top_eigenpairs(std::vector<std::vector<double>> m, std::size_t k) {
    const std::size_t n = m.size();
    std::vector<EigenPair> pairs;
    Rng rng(12345);
    for (std::size_t e = 0; e < k; ++e) {
        std::vector<double> v(n);
        for (auto& x : v) x = rng.next_gaussian();
        double lambda = 0.0;
        for (int iter = 0; iter < 20000; ++iter) {
            std::vector<double> w(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) w[i] += m[i][j] * v[j];
            double norm = 0.0;
            for (double x : w) norm += x * x;
            norm = std::sqrt(norm);
            for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
            lambda = norm;
        }
        pairs.push_back({lambda, v});
        // Deflate: m -= lambda v v^T.
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m[i][j] -= lambda * v[i] * v[j];
    }
    return pairs;
}

void fix_sign(std::vector<double>& v) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    if (v[arg] < 0.0)
        for (auto& x : v) x = -x;
}

}  // namespace

TEST_CASE("standardize_bands yields zero mean, unit variance, zero-variance rule") {
    HsiCube cube;
    cube.rows = 2;
    cube.cols = 2;
    cube.bands = 2;
    cube.values = {1, 1, 1, 1, /*band 1:*/ 0, 2, 0, 2};
    const HsiCube out = standardize_bands(cube);
    for (std::size_t i = 0; i < 4; ++i) CHECK(out.values[i] == 0.0f);  // constant band
    CHECK(out.values[4] == doctest::Approx(-1.0));
    CHECK(out.values[5] == doctest::Approx(1.0));

    const HsiCube random = test::random_cube(9, 7, 4, 3);
    const HsiCube std_cube = standardize_bands(random);
    const std::size_t pixels = std_cube.pixel_count();
    for (std::size_t b = 0; b < std_cube.bands; ++b) {
        double mean = 0.0, var = 0.0;
        for (std::size_t p = 0; p < pixels; ++p) mean += std_cube.values[b * pixels + p];
        mean /= static_cast<double>(pixels);
        for (std::size_t p = 0; p < pixels; ++p) {
            const double d = std_cube.values[b * pixels + p] - mean;
            var += d * d;
        }
        var /= static_cast<double>(pixels);
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(var - 1.0) < 1e-5);
    }
}

TEST_CASE("fit_pca isolates a single-direction signal") {
    HsiCube cube;
    cube.rows = 4;
    cube.cols = 4;
    cube.bands = 3;
    cube.values.assign(48, 0.0f);
    Rng rng(8);
    // Variance only in band 0; bands 1 and 2 constant.
    for (std::size_t p = 0; p < 16; ++p) cube.values[p] = static_cast<float>(rng.next_gaussian());
    for (std::size_t p = 16; p < 48; ++p) cube.values[p] = 0.5f;

    const PcaModel model = fit_pca(cube, 1);
    CHECK(model.components[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(model.components[1]) < 1e-9);
    CHECK(std::abs(model.components[2]) < 1e-9);

    const auto cov = covariance_of(cube);
    CHECK(model.explained_variance[0] == doctest::Approx(cov[0][0]).epsilon(1e-9));
}

TEST_CASE("fit_pca matches the brute-force eigensolver oracle") {
    const HsiCube cube = test::random_cube(10, 10, 6, 77);
    const PcaModel model = fit_pca(cube, 3);

    auto oracle = top_eigenpairs(covariance_of(cube), 3);
    for (std::size_t i = 0; i < 3; ++i) {
        fix_sign(oracle[i].vector);
        CHECK(model.explained_variance[i] ==
              doctest::Approx(oracle[i].value).epsilon(1e-8));
        for (std::size_t b = 0; b < 6; ++b)
            CHECK(model.component(i, b) == doctest::Approx(oracle[i].vector[b]).epsilon(1e-6));
    }
}

TEST_CASE("PCA component rows are orthonormal, variances non-increasing") {
    const HsiCube cube = test::random_cube(12, 9, 8, 5);
    const PcaModel model = fit_pca(cube, 8);
    for (std::size_t i = 0; i < model.k; ++i) {
        for (std::size_t j = 0; j < model.k; ++j) {
            double dot = 0.0;
            for (std::size_t b = 0; b < model.bands; ++b)
                dot += model.component(i, b) * model.component(j, b);
            CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-6);
        }
        if (i > 0) CHECK(model.explained_variance[i] <= model.explained_variance[i - 1] + 1e-12);
        CHECK(model.explained_variance[i] >= 0.0);
    }
}

TEST_CASE("full-rank projection preserves pairwise distances") {
    const HsiCube cube = test::random_cube(6, 6, 5, 21);
    const PcaModel model = fit_pca(cube, 5);
    const HsiCube projected = apply_pca(cube, model);
    const std::size_t pixels = cube.pixel_count();
    auto dist = [pixels](const HsiCube& c, std::size_t p, std::size_t q) {
        double acc = 0.0;
        for (std::size_t b = 0; b < c.bands; ++b) {
            const double d = c.values[b * pixels + p] - c.values[b * pixels + q];
            acc += d * d;
        }
        return std::sqrt(acc);
    };
    for (std::size_t p = 0; p < pixels; p += 5)
        for (std::size_t q = p + 1; q < pixels; q += 7)
            CHECK(dist(cube, p, q) == doctest::Approx(dist(projected, p, q)).epsilon(1e-4));
}

TEST_CASE("apply_pca projects spectra onto component rows") {
    // Cube whose single pixel-spectrum equals component row 0 after centering.
    const HsiCube base = test::random_cube(5, 5, 4, 31);
    const PcaModel model = fit_pca(base, 4);

    HsiCube one;
    one.rows = 1;
    one.cols = 1;
    one.bands = 4;
    one.values.resize(4);
    for (std::size_t b = 0; b < 4; ++b)
        one.values[b] = static_cast<float>(model.mean[b] + model.component(0, b));
    const HsiCube out = apply_pca(one, model);
    CHECK(out.values[0] == doctest::Approx(1.0).epsilon(1e-5));
    for (std::size_t i = 1; i < 4; ++i) CHECK(std::abs(out.values[i]) < 1e-5);

    HsiCube wrong = one;
    wrong.bands = 3;
    wrong.values.resize(3);
    CHECK_THROWS_AS(static_cast<void>(apply_pca(wrong, model)), Error);
}

TEST_CASE("rank-k reconstruction error equals discarded eigenvalue mass") {
    const HsiCube cube = test::random_cube(8, 8, 6, 99);
    const HsiCube std_cube = standardize_bands(cube);
    const PcaModel full = fit_pca(std_cube, 6);
    const std::size_t k = 2;
    const PcaModel model = fit_pca(std_cube, k);
    const HsiCube proj = apply_pca(std_cube, model);

    // Reconstruct from k components and accumulate squared error.
    const std::size_t pixels = std_cube.pixel_count();
    double err = 0.0;
    for (std::size_t p = 0; p < pixels; ++p)
        for (std::size_t b = 0; b < 6; ++b) {
            double rec = model.mean[b];
            for (std::size_t i = 0; i < k; ++i)
                rec += proj.values[i * pixels + p] * model.component(i, b);
            const double d = std_cube.values[b * pixels + p] - rec;
            err += d * d;
        }
    double discarded = 0.0;
    for (std::size_t i = k; i < 6; ++i) discarded += full.explained_variance[i];
    CHECK(err == doctest::Approx(discarded * static_cast<double>(pixels)).epsilon(1e-4));
}

TEST_CASE("projected band variances equal explained_variance") {
    const HsiCube cube = test::random_cube(9, 9, 5, 13);
    const PcaModel model = fit_pca(cube, 3);
    const HsiCube proj = apply_pca(cube, model);
    const std::size_t pixels = proj.pixel_count();
    for (std::size_t i = 0; i < 3; ++i) {
        double mean = 0.0, var = 0.0;
        for (std::size_t p = 0; p < pixels; ++p) mean += proj.values[i * pixels + p];
        mean /= static_cast<double>(pixels);
        for (std::size_t p = 0; p < pixels; ++p) {
            const double d = proj.values[i * pixels + p] - mean;
            var += d * d;
        }
        var /= static_cast<double>(pixels);
        CHECK(var == doctest::Approx(model.explained_variance[i]).epsilon(1e-5));
    }
}

TEST_CASE("PCA model dump round-trips") {
    test::TempDir dir("pca");
    const PcaModel model = fit_pca(test::random_cube(7, 7, 5, 2), 3);
    save_pca_model(model, dir.path() / "pca.json");
    const PcaModel back = load_pca_model(dir.path() / "pca.json");
    CHECK(back.mean == model.mean);
    CHECK(back.components == model.components);
    CHECK(back.explained_variance == model.explained_variance);
}

TEST_CASE("extract_patch mirrors at borders and centers correctly") {
    HsiCube cube;
    cube.rows = 4;
    cube.cols = 4;
    cube.bands = 1;
    cube.values.resize(16);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) cube.at(r, c, 0) = static_cast<float>(10 * r + c);

    // P = 1 is the pixel itself.
    CHECK(extract_patch(cube, 2, 3, 1) == std::vector<float>{23.0f});

    // Corner (0,0), P = 3: the top-left entry reflects to v(1,1) = 11.
    const auto patch = extract_patch(cube, 0, 0, 3);
    CHECK(patch[0] == 11.0f);
    CHECK(patch[4] == 0.0f);  // center equals the cube value at (0,0)

    // Center invariant on an interior pixel.
    const auto interior = extract_patch(cube, 2, 2, 3);
    CHECK(interior[4] == 22.0f);

    CHECK_THROWS_AS(static_cast<void>(extract_patch(cube, 9, 0, 3)), Error);
    CHECK_THROWS_AS(static_cast<void>(extract_patch(cube, 1, 1, 2)), Error);
}

TEST_CASE("patch extraction is translation-consistent in the interior") {
    const HsiCube cube = test::random_cube(10, 10, 3, 17);
    // Shift the scene by one pixel and compare shifted queries.
    HsiCube shifted;
    shifted.rows = 10;
    shifted.cols = 10;
    shifted.bands = 3;
    shifted.values.assign(cube.values.size(), 0.0f);
    for (std::size_t r = 0; r + 1 < 10; ++r)
        for (std::size_t c = 0; c + 1 < 10; ++c)
            for (std::size_t b = 0; b < 3; ++b) shifted.at(r, c, b) = cube.at(r + 1, c + 1, b);
    CHECK(extract_patch(cube, 5, 5, 3) == extract_patch(shifted, 4, 4, 3));
}

TEST_CASE("BatchStream covers each subset pixel once per epoch") {
    const HsiCube cube = test::random_cube(5, 4, 2, 4);
    GroundTruth gt;
    gt.rows = 5;
    gt.cols = 4;
    gt.num_classes = 2;
    gt.class_names = {"a", "b"};
    gt.labels.assign(20, 1);
    for (std::size_t i = 10; i < 20; ++i) gt.labels[i] = 2;
    // Everything goes to train: 10 + 10 pixels.
    const auto split = stratified_split(gt, {1.0, 0.0, 0.0}, 3);

    BatchStream stream(cube, split, Subset::Train, 3, 4, 11, /*shuffle=*/true);
    CHECK(stream.sample_count() == 20);
    CHECK(stream.batch_count() == 5);

    stream.begin_epoch(1);
    std::vector<PixelCoord> seen;
    std::vector<std::size_t> sizes;
    for (std::size_t b = 0; b < stream.batch_count(); ++b) {
        const auto batch = stream.batch(b, gt);
        sizes.push_back(batch.batch);
        for (auto c : batch.coords) seen.push_back(c);
        for (auto l : batch.labels) CHECK(l != 0);
    }
    CHECK(sizes == std::vector<std::size_t>{4, 4, 4, 4, 4});
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
    CHECK(seen.size() == 20);

    // 10 pixels with batch 4 -> 4,4,2.
    GroundTruth small = gt;
    for (std::size_t i = 10; i < 20; ++i) small.labels[i] = 0;
    small.num_classes = 1;
    small.class_names = {"a"};
    const auto ssplit = stratified_split(small, {1.0, 0.0, 0.0}, 3);
    BatchStream sstream(cube, ssplit, Subset::Train, 3, 4, 11, false);
    CHECK(sstream.batch_count() == 3);
    sstream.begin_epoch(0);
    CHECK(sstream.batch(2, small).batch == 2);

    // shuffle=false yields row-major coordinate order.
    const auto first = sstream.batch(0, small);
    for (std::size_t i = 1; i < first.coords.size(); ++i)
        CHECK(first.coords[i - 1] < first.coords[i]);
}

TEST_CASE("BatchStream is reproducible per seed and epoch") {
    const HsiCube cube = test::random_cube(6, 6, 2, 4);
    GroundTruth gt;
    gt.rows = 6;
    gt.cols = 6;
    gt.num_classes = 1;
    gt.class_names = {"a"};
    gt.labels.assign(36, 1);
    const auto split = stratified_split(gt, {1.0, 0.0, 0.0}, 0);

    BatchStream a(cube, split, Subset::Train, 3, 8, 21, true);
    BatchStream b(cube, split, Subset::Train, 3, 8, 21, true);
    a.begin_epoch(4);
    b.begin_epoch(4);
    for (std::size_t i = 0; i < a.batch_count(); ++i) {
        CHECK(a.batch(i, gt).coords == b.batch(i, gt).coords);
        CHECK(a.batch(i, gt).data == b.batch(i, gt).data);
    }
    // A different epoch reshuffles.
    b.begin_epoch(5);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.batch_count() && !any_diff; ++i)
        any_diff = a.batch(i, gt).coords != b.batch(i, gt).coords;
    CHECK(any_diff);
}

TEST_CASE("empty subset is rejected") {
    const HsiCube cube = test::random_cube(4, 4, 2, 4);
    GroundTruth gt;
    gt.rows = 4;
    gt.cols = 4;
    gt.num_classes = 1;
    gt.class_names = {"a"};
    gt.labels.assign(16, 1);
    const auto split = stratified_split(gt, {1.0, 0.0, 0.0}, 0);
    try {
        BatchStream stream(cube, split, Subset::Val, 3, 4, 0, false);
        FAIL("expected EmptySubset");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptySubset);
    }
}
