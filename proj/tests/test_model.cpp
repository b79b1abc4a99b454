#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hsic/gradcheck.hpp"
#include "hsic/model.hpp"
#include "test_util.hpp"

using namespace hsic;

TEST_CASE("default architecture matches the reference stack") {
    const ArchSpec arch = build_default_arch(16);
    REQUIRE(arch.conv3d_layers.size() == 4);
    CHECK(arch.conv3d_layers[0].filters == 8);
    CHECK(arch.conv3d_layers[0].k1 == 5);
    CHECK(arch.conv3d_layers[0].k3 == 7);
    CHECK(arch.conv3d_layers[1].filters == 16);
    CHECK(arch.conv3d_layers[2].filters == 32);
    CHECK(arch.conv3d_layers[3].filters == 64);
    CHECK(arch.conv2d_layer.filters == 128);
    CHECK(arch.dense_units == std::vector<std::size_t>{256, 128, 16});

    const ArchSpec pavia = build_default_arch(9);
    CHECK(pavia.dense_units.back() == 9);
    CHECK(pavia.conv3d_layers.size() == 4);
}

TEST_CASE("shape trace for the default arch is exact") {
    const auto shapes = infer_shapes(build_default_arch(16, 15, 15));
    const std::vector<Shape> expected = {
        {15, 15, 15, 1}, {11, 11, 9, 8}, {7, 7, 5, 16}, {5, 5, 3, 32}, {3, 3, 1, 64},
        {3, 3, 64},      {1, 1, 128},    {128},         {256},         {128},
        {16},
    };
    CHECK(shapes == expected);
}

TEST_CASE("too-small patches are rejected") {
    try {
        static_cast<void>(build_default_arch(16, 5, 15));
        FAIL("expected PatchTooSmall");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PatchTooSmall);
    }

    // A 3D kernel deeper than the remaining spectral extent.
    ArchSpec arch = build_default_arch(4, 15, 15);
    arch.conv3d_layers.push_back({8, 1, 1, 9});
    try {
        static_cast<void>(infer_shapes(arch));
        FAIL("expected NegativeExtent");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NegativeExtent);
    }
}

TEST_CASE("single 1x1x1 conv layer only changes channels") {
    ArchSpec arch;
    arch.conv3d_layers = {{5, 1, 1, 1}};
    arch.conv2d_layer = {3, 1, 1};
    arch.dense_units = {2};
    arch.num_classes = 2;
    arch.patch_size = 7;
    arch.components = 4;
    const auto shapes = infer_shapes(arch);
    CHECK(shapes[1] == Shape{7, 7, 4, 5});
}

TEST_CASE("init_params is seed-deterministic with zero biases") {
    const ArchSpec arch = build_default_arch(16);
    const auto a = init_params<float>(arch, 42);
    const auto b = init_params<float>(arch, 42);
    REQUIRE(a.tensors.size() == b.tensors.size());
    for (std::size_t i = 0; i < a.tensors.size(); ++i)
        CHECK(a.tensors[i]->value == b.tensors[i]->value);

    const auto c = init_params<float>(arch, 43);
    CHECK(a.tensors[0]->value != c.tensors[0]->value);

    CHECK(a.find("conv3d_1.kernels")->shape == Shape{8, 5, 5, 7, 1});
    CHECK(a.find("conv3d_1.kernels")->numel() == 1400);
    for (const auto& t : a.tensors)
        if (t->name.ends_with(".bias"))
            for (float v : t->value) CHECK(v == 0.0f);
}

TEST_CASE("parameter count is pinned for the default IP arch") {
    const ArchSpec arch = build_default_arch(16, 15, 15);
    // Shape-trace arithmetic: conv kernels+biases, then 128*256+256 etc.
    std::size_t expected = 0;
    expected += 8 * 5 * 5 * 7 * 1 + 8;
    expected += 16 * 5 * 5 * 5 * 8 + 16;
    expected += 32 * 3 * 3 * 3 * 16 + 32;
    expected += 64 * 3 * 3 * 3 * 32 + 64;
    expected += 128 * 3 * 3 * 64 + 128;
    expected += 128 * 256 + 256;
    expected += 256 * 128 + 128;
    expected += 128 * 16 + 16;
    CHECK(parameter_count(arch) == expected);
    CHECK(parameter_count(arch) == 228480);  // regression constant

    const auto params = init_params<float>(arch, 0);
    std::size_t total = 0;
    for (const auto& t : params.tensors) total += t->numel();
    CHECK(total == expected);
}

TEST_CASE("forward produces row-stochastic outputs of the right shape") {
    const ArchSpec arch = build_default_arch(16);
    const auto params = init_params<float>(arch, 7);
    auto input = make_tensor<float>({2, 15, 15, 15, 1});
    Rng rng(3);
    fill_uniform(*input, rng, 1.0);
    Tape<float> tape;
    auto probs = forward(tape, params, input);
    REQUIRE(probs->shape == Shape{2, 16});
    for (std::size_t r = 0; r < 2; ++r) {
        double sum = 0.0;
        for (std::size_t y = 0; y < 16; ++y) sum += probs->value[r * 16 + y];
        CHECK(std::abs(sum - 1.0) < 1e-6);
    }
}

TEST_CASE("all-zero parameters give uniform class probabilities") {
    const ArchSpec arch = build_default_arch(8);
    auto params = init_params<float>(arch, 1);
    for (auto& t : params.tensors) std::fill(t->value.begin(), t->value.end(), 0.0f);
    auto input = make_tensor<float>({1, 15, 15, 15, 1});
    Rng rng(3);
    fill_uniform(*input, rng, 1.0);
    Tape<float> tape;
    auto probs = forward(tape, params, input);
    for (float v : probs->value) CHECK(v == doctest::Approx(0.125));
}

TEST_CASE("forward is per-sample independent") {
    // Small custom arch keeps this quick.
    ArchSpec arch;
    arch.conv3d_layers = {{2, 3, 3, 3}, {4, 3, 3, 3}};
    arch.conv2d_layer = {4, 3, 3};
    arch.dense_units = {8, 3};
    arch.num_classes = 3;
    arch.patch_size = 7;
    arch.components = 6;
    const auto params = init_params<float>(arch, 9);

    Rng rng(12);
    auto a = make_tensor<float>({1, 7, 7, 6, 1});
    auto b = make_tensor<float>({1, 7, 7, 6, 1});
    fill_uniform(*a, rng, 1.0);
    fill_uniform(*b, rng, 1.0);
    auto both = make_tensor<float>({2, 7, 7, 6, 1});
    std::copy(a->value.begin(), a->value.end(), both->value.begin());
    std::copy(b->value.begin(), b->value.end(), both->value.begin() + a->numel());

    Tape<float> tape;
    auto pa = forward(tape, params, a);
    auto pb = forward(tape, params, b);
    auto pboth = forward(tape, params, both);
    for (std::size_t y = 0; y < 3; ++y) {
        CHECK(pboth->value[y] == doctest::Approx(pa->value[y]));
        CHECK(pboth->value[3 + y] == doctest::Approx(pb->value[y]));
    }

    // Swapping batch order permutes rows identically.
    auto swapped = make_tensor<float>({2, 7, 7, 6, 1});
    std::copy(b->value.begin(), b->value.end(), swapped->value.begin());
    std::copy(a->value.begin(), a->value.end(), swapped->value.begin() + a->numel());
    auto pswap = forward(tape, params, swapped);
    for (std::size_t y = 0; y < 3; ++y) {
        CHECK(pswap->value[y] == pboth->value[3 + y]);
        CHECK(pswap->value[3 + y] == pboth->value[y]);
    }
}

TEST_CASE("end-to-end gradcheck of the smoothed loss on a reduced stack") {
    // Full-size gradcheck is the acceptance suite's job; this covers the same
    // composition at a tractable parameter count.
    ArchSpec arch;
    arch.conv3d_layers = {{2, 2, 2, 3}, {3, 2, 2, 2}};
    arch.conv2d_layer = {4, 2, 2};
    arch.dense_units = {6, 4};
    arch.num_classes = 4;
    arch.patch_size = 5;
    arch.components = 5;
    auto params = init_params<double>(arch, 11);

    auto input = make_tensor<double>({2, 5, 5, 5, 1});
    Rng rng(13);
    fill_uniform(*input, rng, 1.0);
    const std::vector<std::uint16_t> labels{2, 4};
    const auto targets = smooth_targets<double>(labels, {0.1, 4});

    auto loss_fn = [&](bool grads) {
        Tape<double> tape;
        auto probs = forward(tape, params, input);
        auto loss = cross_entropy(tape, probs, targets);
        if (grads) tape.backward(loss);
        return loss->value[0];
    };
    const auto report = gradcheck(params.tensors, loss_fn, 1e-4);
    CHECK(report.passed);
    CHECK(report.max_rel_error <= 1e-4);
}

TEST_CASE("checkpoints round-trip parameters exactly") {
    test::TempDir dir("ckpt");
    const ArchSpec arch = build_default_arch(5, 15, 15);
    const auto params = init_params<float>(arch, 77);
    save_checkpoint(params, dir.path() / "checkpoint.json");
    const auto back = load_checkpoint<float>(arch, dir.path() / "checkpoint.json");
    REQUIRE(back.tensors.size() == params.tensors.size());
    for (std::size_t i = 0; i < params.tensors.size(); ++i) {
        CHECK(back.tensors[i]->name == params.tensors[i]->name);
        CHECK(back.tensors[i]->value == params.tensors[i]->value);
    }

    // A mismatched architecture is refused.
    const ArchSpec other = build_default_arch(6, 15, 15);
    try {
        static_cast<void>(load_checkpoint<float>(other, dir.path() / "checkpoint.json"));
        FAIL("expected ManifestMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ManifestMismatch);
    }
}

TEST_CASE("batch_to_tensor carries patch data into the input layout") {
    PatchBatch batch;
    batch.batch = 2;
    batch.patch_size = 3;
    batch.bands = 2;
    batch.data.resize(2 * 3 * 3 * 2);
    for (std::size_t i = 0; i < batch.data.size(); ++i)
        batch.data[i] = static_cast<float>(i);
    auto t = batch_to_tensor<float>(batch);
    CHECK(t->shape == Shape{2, 3, 3, 2, 1});
    CHECK(t->value[5] == 5.0f);
}
