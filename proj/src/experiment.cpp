#include "hsic/experiment.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>

#include <nlohmann/json.hpp>

#include "hsic/io.hpp"
#include "hsic/pca.hpp"
#include "hsic/train.hpp"

namespace hsic {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct PreparedScene {
    HsiCube reduced;  // standardized + PCA-projected
    GroundTruth gt;
    SplitAssignment split;
    PcaModel pca;
};

PreparedScene prepare_scene(const ExperimentConfig& config, const PcaModel* fixed_pca) {
    PreparedScene scene;
    const HsiCube cube = load_cube(config.cube_header);
    scene.gt = load_ground_truth(config.gt_header);
    if (scene.gt.rows != cube.rows || scene.gt.cols != cube.cols)
        throw Error(ErrorCode::DimensionMismatch, "cube and ground truth dimensions differ");
    scene.split = stratified_split(scene.gt, config.ratios, config.seed);

    const HsiCube standardized = standardize_bands(cube);
    if (fixed_pca) {
        scene.pca = *fixed_pca;
    } else if (config.pca_fit_train_only) {
        // Fit on a cube holding only the train pixels (others zeroed out of
        // the covariance by restriction to the train coordinate list).
        const auto coords = scene.split.coords_of(Subset::Train);
        HsiCube train_view;
        train_view.rows = coords.size();
        train_view.cols = 1;
        train_view.bands = standardized.bands;
        train_view.values.resize(coords.size() * standardized.bands);
        for (std::size_t b = 0; b < standardized.bands; ++b)
            for (std::size_t i = 0; i < coords.size(); ++i)
                train_view.values[b * coords.size() + i] =
                    standardized.at(coords[i].row, coords[i].col, b);
        scene.pca = fit_pca(train_view, config.num_components);
    } else {
        scene.pca = fit_pca(standardized, config.num_components);
    }
    scene.reduced = apply_pca(standardized, scene.pca);
    return scene;
}

json manifest_json(const ExperimentConfig& config, const ArchSpec& arch) {
    return json{
        {"config_hash", config.config_hash()},
        {"num_components", config.num_components},
        {"patch_size", config.patch_size},
        {"ratios", config.ratios},
        {"seed", config.seed},
        {"epsilon", config.epsilon},
        {"precision", config.precision},
        {"pca_fit_train_only", config.pca_fit_train_only},
        {"num_classes", arch.num_classes},
        {"arch",
         {{"conv3d",
           [&arch] {
               json layers = json::array();
               for (const auto& l : arch.conv3d_layers)
                   layers.push_back({l.filters, l.k1, l.k2, l.k3});
               return layers;
           }()},
          {"conv2d", {arch.conv2d_layer.filters, arch.conv2d_layer.k1, arch.conv2d_layer.k2}},
          {"dense", arch.dense_units}}},
    };
}

void check_manifest(const ExperimentConfig& config, const json& manifest) {
    auto mismatch = [](const std::string& field) {
        throw Error(ErrorCode::ManifestMismatch,
                    "checkpoint manifest disagrees with config on " + field);
    };
    if (manifest.at("num_components").get<std::size_t>() != config.num_components)
        mismatch("num_components");
    if (manifest.at("patch_size").get<std::size_t>() != config.patch_size)
        mismatch("patch_size");
    if (manifest.at("ratios").get<std::array<double, 3>>() != config.ratios) mismatch("ratios");
    if (manifest.at("seed").get<std::uint64_t>() != config.seed) mismatch("seed");
    if (manifest.at("precision").get<std::string>() != config.precision) mismatch("precision");
    if (manifest.at("pca_fit_train_only").get<bool>() != config.pca_fit_train_only)
        mismatch("pca_fit_train_only");
}

template <typename T>
void run_train_impl(const ExperimentConfig& config) {
    const fs::path out_dir = config.out_dir;
    fs::create_directories(out_dir);

    const auto start = std::chrono::steady_clock::now();
    PreparedScene scene = prepare_scene(config, nullptr);
    const ArchSpec arch = build_default_arch(scene.gt.num_classes, config.patch_size,
                                             config.num_components);
    ModelParams<T> params = init_params<T>(arch, config.seed);

    BatchStream train_stream(scene.reduced, scene.split, Subset::Train, config.patch_size,
                             config.batch_size, config.seed, /*shuffle=*/true);
    BatchStream val_stream(scene.reduced, scene.split, Subset::Val, config.patch_size,
                           config.batch_size, config.seed, /*shuffle=*/false);

    TrainConfig tc;
    tc.epochs = config.epochs;
    tc.batch_size = config.batch_size;
    tc.learning_rate = config.learning_rate;
    tc.epsilon = config.epsilon;
    tc.dropout = config.dropout;
    tc.seed = config.seed;
    tc.hard_targets = config.hard_targets;
    const auto logs = train(params, train_stream, val_stream, scene.gt, tc);
    const double train_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::ofstream curves(out_dir / "curves.csv");
    curves << "epoch,train_loss,train_acc,val_loss,val_acc,seconds\n";
    curves << std::setprecision(12);
    for (const auto& log : logs)
        curves << log.epoch << "," << log.train_loss << "," << log.train_acc << ","
               << log.val_loss << "," << log.val_acc << "," << std::fixed
               << std::setprecision(4) << log.seconds << std::defaultfloat
               << std::setprecision(12) << "\n";

    save_checkpoint(params, out_dir / "checkpoint.json");
    save_pca_model(scene.pca, out_dir / "pca.json");
    save_split(scene.split, out_dir / "split.txt");
    {
        std::ofstream out(out_dir / "manifest.json");
        out << manifest_json(config, arch).dump(2) << "\n";
    }
    json summary = {
        {"epochs", logs.size()},
        {"final_train_loss", logs.back().train_loss},
        {"final_train_acc", logs.back().train_acc},
        {"final_val_loss", logs.back().val_loss},
        {"final_val_acc", logs.back().val_acc},
        {"parameter_count", parameter_count(arch)},
        {"train_seconds", train_seconds},
    };
    std::ofstream out(out_dir / "train_summary.json");
    out << summary.dump(2) << "\n";
}

template <typename T>
std::pair<EvalSummary, EvalResult<T>> run_eval_impl(const ExperimentConfig& config,
                                                    const fs::path& checkpoint_dir,
                                                    Subset subset) {
    std::ifstream manifest_in(checkpoint_dir / "manifest.json");
    if (!manifest_in)
        throw Error(ErrorCode::MissingFile,
                    "no manifest.json under " + checkpoint_dir.string());
    json manifest;
    manifest_in >> manifest;
    check_manifest(config, manifest);

    const PcaModel pca = load_pca_model(checkpoint_dir / "pca.json");
    PreparedScene scene = prepare_scene(config, &pca);
    const ArchSpec arch = build_default_arch(scene.gt.num_classes, config.patch_size,
                                             config.num_components);
    ModelParams<T> params = load_checkpoint<T>(arch, checkpoint_dir / "checkpoint.json");

    BatchStream stream(scene.reduced, scene.split, subset, config.patch_size,
                       config.batch_size, config.seed, /*shuffle=*/false);
    EvalResult<T> result = evaluate(params, stream, scene.gt, config.epsilon);

    EvalSummary summary;
    summary.matrix = confusion(result.predictions, result.truths, arch.num_classes);
    summary.overall_accuracy = overall_accuracy(summary.matrix);
    summary.average_accuracy = average_accuracy(summary.matrix);
    summary.kappa = kappa(summary.matrix);
    summary.per_class = per_class_accuracy(summary.matrix);
    summary.ece = ece(result.probs, result.truths, arch.num_classes).first;
    summary.mean_loss = result.mean_loss;
    summary.test_seconds = result.seconds;
    return {std::move(summary), std::move(result)};
}

json report_json(const EvalSummary& summary, const GroundTruth& gt,
                 const std::array<double, 3>& ratios) {
    json per_class = json::array();
    const auto hist = class_histogram(gt);
    for (std::size_t c = 0; c < summary.per_class.size(); ++c) {
        const auto counts = split_counts(hist[c].second, ratios);
        per_class.push_back({
            {"class_id", c + 1},
            {"class_name", gt.class_names[c]},
            {"train", counts.train},
            {"val", counts.val},
            {"test", counts.test},
            {"accuracy", summary.per_class[c]},
        });
    }
    json matrix = json::array();
    for (std::size_t t = 1; t <= summary.matrix.num_classes; ++t) {
        json row = json::array();
        for (std::size_t p = 1; p <= summary.matrix.num_classes; ++p)
            row.push_back(summary.matrix.at(t, p));
        matrix.push_back(row);
    }
    return json{
        {"overall_accuracy", summary.overall_accuracy},
        {"average_accuracy", summary.average_accuracy},
        {"kappa", summary.kappa},
        {"ece", summary.ece},
        {"mean_loss", summary.mean_loss},
        {"test_seconds", summary.test_seconds},
        {"per_class", per_class},
        {"confusion", matrix},
    };
}

}  // namespace

void run_train_experiment(const ExperimentConfig& config) {
    config.validate();
    if (config.precision == "f64")
        run_train_impl<double>(config);
    else
        run_train_impl<float>(config);
}

EvalSummary run_eval_experiment(const ExperimentConfig& config,
                                const fs::path& checkpoint_dir) {
    config.validate();
    EvalSummary summary;
    if (config.precision == "f64")
        summary = run_eval_impl<double>(config, checkpoint_dir, Subset::Test).first;
    else
        summary = run_eval_impl<float>(config, checkpoint_dir, Subset::Test).first;

    const GroundTruth gt = load_ground_truth(config.gt_header);
    fs::create_directories(config.out_dir);
    std::ofstream out(fs::path(config.out_dir) / "report.json");
    out << std::setprecision(15) << report_json(summary, gt, config.ratios).dump(2) << "\n";
    return summary;
}

void run_predict_experiment(const ExperimentConfig& config, const fs::path& checkpoint_dir,
                            bool full_scene) {
    config.validate();
    std::ifstream manifest_in(checkpoint_dir / "manifest.json");
    if (!manifest_in)
        throw Error(ErrorCode::MissingFile, "no manifest.json under " + checkpoint_dir.string());
    json manifest;
    manifest_in >> manifest;
    check_manifest(config, manifest);

    const PcaModel pca = load_pca_model(checkpoint_dir / "pca.json");
    PreparedScene scene = prepare_scene(config, &pca);
    const ArchSpec arch = build_default_arch(scene.gt.num_classes, config.patch_size,
                                             config.num_components);

    auto predict_with = [&](auto tag) {
        using T = decltype(tag);
        ModelParams<T> params = load_checkpoint<T>(arch, checkpoint_dir / "checkpoint.json");
        std::vector<PixelCoord> coords;
        for (std::size_t r = 0; r < scene.gt.rows; ++r)
            for (std::size_t c = 0; c < scene.gt.cols; ++c)
                if (full_scene || scene.gt.at(r, c) != 0)
                    coords.push_back(
                        {static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(c)});

        std::vector<std::uint16_t> preds;
        const std::size_t Y = arch.num_classes;
        for (std::size_t begin = 0; begin < coords.size(); begin += config.batch_size) {
            const std::size_t end = std::min(begin + config.batch_size, coords.size());
            PatchBatch batch;
            batch.batch = end - begin;
            batch.patch_size = config.patch_size;
            batch.bands = scene.reduced.bands;
            for (std::size_t i = begin; i < end; ++i) {
                const auto patch = extract_patch(scene.reduced, coords[i].row, coords[i].col,
                                                 config.patch_size);
                batch.data.insert(batch.data.end(), patch.begin(), patch.end());
            }
            Tape<T> tape;
            auto probs = forward(tape, params, batch_to_tensor<T>(batch));
            for (std::size_t i = 0; i + begin < end; ++i)
                preds.push_back(argmax_class(probs->value.data() + i * Y, Y));
        }

        const auto map = render_class_map(coords, preds, scene.gt.rows, scene.gt.cols);
        fs::create_directories(config.out_dir);
        write_pgm(map, scene.gt.rows, scene.gt.cols, arch.num_classes,
                  fs::path(config.out_dir) / "map.pgm");
        write_ppm(map, scene.gt.rows, scene.gt.cols, fs::path(config.out_dir) / "map.ppm");
    };
    if (config.precision == "f64")
        predict_with(double{});
    else
        predict_with(float{});
}

}  // namespace hsic
