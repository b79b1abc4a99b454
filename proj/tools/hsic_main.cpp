#include <chrono>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hsic/experiment.hpp"
#include "hsic/gradcheck.hpp"
#include "hsic/io.hpp"
#include "hsic/loss.hpp"
#include "hsic/model.hpp"
#include "hsic/train.hpp"

namespace {

constexpr int kExitSelftestFail = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;
constexpr int kExitDiverged = 4;
constexpr int kExitManifestMismatch = 5;

int exit_code_for(const hsic::Error& e) {
    switch (e.code()) {
        case hsic::ErrorCode::ConfigError:
        case hsic::ErrorCode::BadRatios:
            return kExitConfigError;
        case hsic::ErrorCode::DivergedLoss:
            return kExitDiverged;
        case hsic::ErrorCode::ManifestMismatch:
            return kExitManifestMismatch;
        default:
            return kExitDataError;
    }
}

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon;
    std::optional<std::size_t> epochs;
    std::optional<std::string> out_dir;
    bool deterministic = false;

    void apply(hsic::ExperimentConfig& config) const {
        if (seed) config.seed = *seed;
        if (epsilon) config.epsilon = *epsilon;
        if (epochs) config.epochs = *epochs;
        if (out_dir) config.out_dir = *out_dir;
        if (deterministic) config.deterministic = true;
    }
};

std::filesystem::path checkpoint_dir_of(const std::string& checkpoint) {
    std::filesystem::path p = checkpoint;
    return std::filesystem::is_directory(p) ? p : p.parent_path();
}

// ---- selftest checks ----

struct CheckResult {
    std::string name;
    bool passed;
    std::string detail;
};

void report(std::vector<CheckResult>& results, const std::string& name, bool passed,
            const std::string& detail = {}) {
    results.push_back({name, passed, detail});
}

void selftest_gradchecks(std::vector<CheckResult>& results) {
    using namespace hsic;
    Rng rng(99);

    {
        auto x = make_tensor<double>({4, 3}, true, "x");
        auto w = make_tensor<double>({3, 5}, true, "w");
        auto b = make_tensor<double>({5}, true, "b");
        for (auto* t : {&x, &w, &b}) fill_uniform(**t, rng, 1.0);
        std::vector<TensorPtr<double>> leaves{x, w, b};
        auto loss_fn = [&](bool grads) {
            Tape<double> tape;
            auto out = ops::dense(tape, x, w, b);
            auto act = ops::relu(tape, out);
            auto loss = ops::sum(tape, act);
            if (grads) tape.backward(loss);
            return loss->value[0];
        };
        auto rep = gradcheck(leaves, loss_fn);
        report(results, "gradcheck dense+relu", rep.passed,
               "max rel err " + std::to_string(rep.max_rel_error));
    }
    {
        auto x = make_tensor<double>({1, 4, 4, 4, 2}, true, "x");
        auto k = make_tensor<double>({3, 2, 2, 2, 2}, true, "k");
        auto b = make_tensor<double>({3}, true, "b");
        for (auto* t : {&x, &k, &b}) fill_uniform(**t, rng, 1.0);
        std::vector<TensorPtr<double>> leaves{x, k, b};
        auto loss_fn = [&](bool grads) {
            Tape<double> tape;
            auto loss = ops::sum(tape, ops::relu(tape, ops::conv3d(tape, x, k, b)));
            if (grads) tape.backward(loss);
            return loss->value[0];
        };
        auto rep = gradcheck(leaves, loss_fn);
        report(results, "gradcheck conv3d", rep.passed,
               "max rel err " + std::to_string(rep.max_rel_error));
    }
    {
        auto x = make_tensor<double>({2, 5, 5, 3}, true, "x");
        auto k = make_tensor<double>({4, 3, 3, 3}, true, "k");
        auto b = make_tensor<double>({4}, true, "b");
        for (auto* t : {&x, &k, &b}) fill_uniform(**t, rng, 1.0);
        std::vector<TensorPtr<double>> leaves{x, k, b};
        auto loss_fn = [&](bool grads) {
            Tape<double> tape;
            auto loss = ops::sum(tape, ops::relu(tape, ops::conv2d(tape, x, k, b)));
            if (grads) tape.backward(loss);
            return loss->value[0];
        };
        auto rep = gradcheck(leaves, loss_fn);
        report(results, "gradcheck conv2d", rep.passed,
               "max rel err " + std::to_string(rep.max_rel_error));
    }
    {
        // softmax + smoothed cross-entropy through the logits
        auto logits = make_tensor<double>({3, 6}, true, "logits");
        fill_uniform(*logits, rng, 2.0);
        std::vector<std::uint16_t> labels{2, 5, 1};
        const auto targets = hsic::smooth_targets<double>(labels, {0.1, 6});
        std::vector<TensorPtr<double>> leaves{logits};
        auto loss_fn = [&](bool grads) {
            Tape<double> tape;
            auto probs = ops::softmax(tape, logits);
            auto loss = cross_entropy(tape, probs, targets);
            if (grads) tape.backward(loss);
            return loss->value[0];
        };
        auto rep = gradcheck(leaves, loss_fn);
        report(results, "gradcheck softmax+cross-entropy", rep.passed,
               "max rel err " + std::to_string(rep.max_rel_error));
    }
}

void selftest_loss_identity(std::vector<CheckResult>& results) {
    using namespace hsic;
    Rng rng(5);
    double worst = 0.0;
    for (double eps : {0.0, 0.05, 0.1, 0.2, 0.5, 1.0}) {
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t B = 8, Y = 7;
            auto logits = make_tensor<double>({B, Y});
            fill_uniform(*logits, rng, 3.0);
            Tape<double> tape;
            auto probs = ops::softmax(tape, logits);
            std::vector<std::uint16_t> labels(B);
            for (auto& l : labels) l = static_cast<std::uint16_t>(1 + rng.next_below(Y));
            const SmoothingParams params{eps, Y};
            auto direct = cross_entropy(tape, probs, smooth_targets<double>(labels, params));
            const double decomposed = decomposed_loss<double>(probs->value, labels, params);
            worst = std::max(worst, std::abs(direct->value[0] - decomposed));
        }
    }
    report(results, "loss identity direct vs decomposed", worst <= 1e-12,
           "max abs diff " + std::to_string(worst));
}

void selftest_metric_oracles(std::vector<CheckResult>& results) {
    using namespace hsic;
    ConfusionMatrix c;
    c.num_classes = 2;
    c.counts = {40, 10, 5, 45};
    const bool ok = std::abs(overall_accuracy(c) - 0.85) < 1e-15 &&
                    std::abs(average_accuracy(c) - 0.85) < 1e-15 &&
                    std::abs(kappa(c) - 0.7) < 1e-12;
    report(results, "metric hand-derived cases", ok);

    // Binary consistency: multiclass P_e vs the P+ + P- expansion.
    const double total = 100.0;
    const double pplus = (50.0 / total) * (45.0 / total);
    const double pminus = (50.0 / total) * (55.0 / total);
    const double po = 0.85;
    const double expected = (po - (pplus + pminus)) / (1.0 - (pplus + pminus));
    report(results, "metric binary P_e consistency", std::abs(kappa(c) - expected) < 1e-15);
}

void selftest_split_rule(std::vector<CheckResult>& results) {
    using hsic::split_counts;
    struct Row {
        std::size_t n, train, val, test;
    };
    // The sixteen reference class sizes with their expected 25/25/50 triples.
    const Row rows[] = {
        {46, 11, 12, 23},    {1428, 357, 357, 714}, {830, 207, 208, 415},
        {236, 59, 59, 118},  {484, 121, 121, 242},  {730, 182, 183, 365},
        {28, 7, 7, 14},      {478, 119, 120, 239},  {20, 5, 5, 10},
        {972, 243, 243, 486}, {2456, 614, 614, 1228}, {594, 148, 149, 297},
        {204, 51, 51, 102},  {1266, 316, 317, 633}, {386, 96, 97, 193},
        {92, 23, 23, 46},
    };
    bool ok = true;
    for (const auto& row : rows) {
        const auto counts = split_counts(row.n, {0.25, 0.25, 0.5});
        ok = ok && counts.train == row.train && counts.val == row.val && counts.test == row.test;
    }
    report(results, "split rule 25/25/50 reference triples", ok);
}

int run_selftest(bool corrupt_conv_grad) {
    std::vector<CheckResult> results;
    if (corrupt_conv_grad) hsic::ops::debug_conv3d_grad_scale = 1.01;
    selftest_gradchecks(results);
    hsic::ops::debug_conv3d_grad_scale = 1.0;
    selftest_loss_identity(results);
    selftest_metric_oracles(results);
    selftest_split_rule(results);

    // The checker itself must notice a deliberately corrupted gradient.
    {
        using namespace hsic;
        Rng rng(3);
        auto x = make_tensor<double>({1, 4, 4, 4, 1}, true, "x");
        auto k = make_tensor<double>({1, 2, 2, 2, 1}, true, "k");
        auto b = make_tensor<double>({1}, true, "b");
        for (auto* t : {&x, &k, &b}) fill_uniform(**t, rng, 1.0);
        std::vector<TensorPtr<double>> leaves{x};
        ops::debug_conv3d_grad_scale = 1.01;
        auto loss_fn = [&](bool grads) {
            Tape<double> tape;
            auto loss = ops::sum(tape, ops::conv3d(tape, x, k, b));
            if (grads) tape.backward(loss);
            return loss->value[0];
        };
        const auto rep = gradcheck(leaves, loss_fn);
        ops::debug_conv3d_grad_scale = 1.0;
        report(results, "gradcheck detects 1% corruption", !rep.passed);
    }

    bool all = true;
    for (const auto& r : results) {
        std::cout << (r.passed ? "PASS" : "FAIL") << "  " << r.name;
        if (!r.detail.empty()) std::cout << "  (" << r.detail << ")";
        std::cout << "\n";
        all = all && r.passed;
    }
    return all ? 0 : kExitSelftestFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hyperspectral image classification with a label-smoothed hybrid 3D/2D CNN"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_path, out_path, header_path;
    bool full_scene = false, corrupt_conv_grad = false;
    Overrides overrides;

    auto add_common = [&](CLI::App* cmd, bool with_config = true) {
        if (with_config)
            cmd->add_option("--config", config_path, "experiment config JSON")->required();
        cmd->add_option("--seed", overrides.seed, "override the config seed");
        cmd->add_option("--epsilon", overrides.epsilon, "override the smoothing weight");
        cmd->add_option("--epochs", overrides.epochs, "override the epoch count");
        cmd->add_option("--out-dir", overrides.out_dir, "override the output directory");
        cmd->add_flag("--deterministic", overrides.deterministic,
                      "force bit-exact single-stream execution");
    };

    auto* train_cmd = app.add_subcommand("train", "preprocess, split and train; writes curves, checkpoint and manifest");
    add_common(train_cmd);
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test subset");
    add_common(eval_cmd);
    eval_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint directory (or checkpoint.json)")
        ->required();
    auto* predict_cmd = app.add_subcommand("predict", "write classification maps");
    add_common(predict_cmd);
    predict_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint directory")->required();
    predict_cmd->add_flag("--full-scene", full_scene, "predict every pixel, labeled or not");
    auto* selftest_cmd = app.add_subcommand("selftest", "run the built-in verification suite");
    selftest_cmd
        ->add_flag("--corrupt-conv-grad", corrupt_conv_grad,
                   "test hook: corrupt the conv3d gradient so the suite must fail")
        ->group("");
    auto* split_cmd = app.add_subcommand("split", "export the stratified split assignment");
    add_common(split_cmd);
    split_cmd->add_option("--out", out_path, "output path for the split lines")->required();
    auto* inspect_cmd = app.add_subcommand("inspect", "print a cube or ground-truth header");
    inspect_cmd->add_option("header", header_path, "header JSON path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(selftest_cmd)) return run_selftest(corrupt_conv_grad);

        if (app.got_subcommand(inspect_cmd)) {
            try {
                const auto cube = hsic::load_cube(header_path);
                std::cout << "cube \"" << cube.name << "\": " << cube.rows << " x " << cube.cols
                          << " x " << cube.bands << " (f32, bsq)\n";
                return 0;
            } catch (const hsic::Error&) {
                // fall through to ground truth
            }
            const auto gt = hsic::load_ground_truth(header_path);
            std::cout << "ground truth: " << gt.rows << " x " << gt.cols << ", "
                      << gt.num_classes << " classes, " << gt.labeled_count()
                      << " labeled pixels\n";
            for (const auto& [cls, count] : hsic::class_histogram(gt))
                std::cout << "  " << cls << "  " << gt.class_names[cls - 1] << "  " << count
                          << "\n";
            return 0;
        }

        hsic::ExperimentConfig config = hsic::load_config(config_path);
        overrides.apply(config);
        config.validate();

        if (app.got_subcommand(train_cmd)) {
            hsic::run_train_experiment(config);
            std::cout << "trained; artifacts under " << config.out_dir << "\n";
        } else if (app.got_subcommand(eval_cmd)) {
            const auto summary =
                hsic::run_eval_experiment(config, checkpoint_dir_of(checkpoint_path));
            std::cout << std::fixed << std::setprecision(4)
                      << "OA " << 100.0 * summary.overall_accuracy << "%  AA "
                      << 100.0 * summary.average_accuracy << "%  kappa "
                      << 100.0 * summary.kappa << "  ECE " << summary.ece << "  ("
                      << summary.test_seconds << " s)\n";
        } else if (app.got_subcommand(predict_cmd)) {
            hsic::run_predict_experiment(config, checkpoint_dir_of(checkpoint_path), full_scene);
            std::cout << "maps written under " << config.out_dir << "\n";
        } else if (app.got_subcommand(split_cmd)) {
            const auto gt = hsic::load_ground_truth(config.gt_header);
            const auto split = hsic::stratified_split(gt, config.ratios, config.seed);
            hsic::save_split(split, out_path);
            std::cout << "split written to " << out_path << "\n";
        }
        return 0;
    } catch (const hsic::Error& e) {
        std::cerr << "error [" << hsic::error_code_name(e.code()) << "]: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
}
