#pragma once

#include "hsic/config.hpp"
#include "hsic/metrics.hpp"
#include "hsic/split.hpp"

namespace hsic {

/// Summary of an evaluation pass, mirrored into report.json.
struct EvalSummary {
    double overall_accuracy = 0.0;
    double average_accuracy = 0.0;
    double kappa = 0.0;
    double ece = 0.0;
    double mean_loss = 0.0;
    double test_seconds = 0.0;
    std::vector<double> per_class;
    ConfusionMatrix matrix;
};

/// Preprocess + split + train; writes curves.csv, checkpoint.{json,bin},
/// pca.{json,bin}, manifest.json and train_summary.json under out_dir.
void run_train_experiment(const ExperimentConfig& config);

/// Evaluates the test subset against a trained checkpoint directory; writes
/// report.json under out_dir and returns the summary.
EvalSummary run_eval_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& checkpoint_dir);

/// Writes map.pgm (and map.ppm) over the labeled pixels, or the whole scene
/// when full_scene is set.
void run_predict_experiment(const ExperimentConfig& config,
                            const std::filesystem::path& checkpoint_dir, bool full_scene);

}  // namespace hsic
