#pragma once

#include <chrono>
#include <cmath>

#include "hsic/model.hpp"

namespace hsic {

struct AdamHyper {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double delta = 1e-8;  // numerical-stability term
};

template <typename T>
struct AdamState {
    AdamHyper hyper;
    std::size_t step = 0;  // t
    std::vector<std::vector<T>> m;  // first moments, one per parameter tensor
    std::vector<std::vector<T>> v;  // second moments

    explicit AdamState(const AdamHyper& h = {}) : hyper(h) {}

    void ensure(const std::vector<TensorPtr<T>>& params) {
        if (!m.empty()) return;
        for (const auto& p : params) {
            m.emplace_back(p->numel(), T(0));
            v.emplace_back(p->numel(), T(0));
        }
    }
};

/// One Adam update from the grads currently stored on the parameter tensors.
template <typename T>
void adam_step(const std::vector<TensorPtr<T>>& params, AdamState<T>& state) {
    state.ensure(params);
    if (state.m.size() != params.size())
        throw Error(ErrorCode::ShapeMismatch, "Adam state does not match parameter list");
    ++state.step;
    const double b1 = state.hyper.beta1, b2 = state.hyper.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        if (p.grad.size() != p.value.size())
            throw Error(ErrorCode::ShapeMismatch, "parameter has no gradient");
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double g = p.grad[j];
            m[j] = static_cast<T>(b1 * m[j] + (1.0 - b1) * g);
            v[j] = static_cast<T>(b2 * v[j] + (1.0 - b2) * g * g);
            const double m_hat = m[j] / bc1;
            const double v_hat = v[j] / bc2;
            p.value[j] = static_cast<T>(
                p.value[j] - state.hyper.learning_rate * m_hat /
                                 (std::sqrt(v_hat) + state.hyper.delta));
        }
    }
}

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 256;
    double learning_rate = 0.001;
    double epsilon = 0.1;  // label-smoothing weight
    double dropout = 0.0;
    std::uint64_t seed = 0;
    bool shuffle = true;
    // When set, targets are built as plain one-hot vectors instead of going
    // through the smoothing path with epsilon = 0.
    bool hard_targets = false;

    void validate() const {
        if (epochs < 1) throw Error(ErrorCode::ConfigError, "epochs must be >= 1");
        if (batch_size < 1) throw Error(ErrorCode::ConfigError, "batch_size must be >= 1");
        if (!(learning_rate > 0.0)) throw Error(ErrorCode::ConfigError, "learning_rate must be > 0");
        if (!(epsilon >= 0.0 && epsilon <= 1.0))
            throw Error(ErrorCode::ConfigError, "epsilon must lie in [0, 1]");
        if (!(dropout >= 0.0 && dropout < 1.0))
            throw Error(ErrorCode::ConfigError, "dropout must lie in [0, 1)");
    }
};

struct EpochLog {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;  // mean per-sample loss
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
    double seconds = 0.0;
};

template <typename T>
struct EvalResult {
    std::vector<PixelCoord> coords;
    std::vector<std::uint16_t> predictions;  // argmax class ids, 1..Y
    std::vector<T> probs;                    // n x Y, row-major
    std::vector<std::uint16_t> truths;
    double mean_loss = 0.0;
    double accuracy = 0.0;
    double seconds = 0.0;
};

/// Argmax with ties broken toward the lowest class index.
template <typename T>
std::uint16_t argmax_class(const T* row, std::size_t num_classes) {
    std::size_t best = 0;
    for (std::size_t y = 1; y < num_classes; ++y)
        if (row[y] > row[best]) best = y;
    return static_cast<std::uint16_t>(best + 1);
}

/// Inference pass over one subset: per-coordinate predictions, mean smoothed
/// loss at the given epsilon, accuracy, and wall-clock seconds.
template <typename T>
EvalResult<T> evaluate(const ModelParams<T>& params, BatchStream& stream,
                       const GroundTruth& gt, double epsilon = 0.0) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t Y = params.arch.num_classes;
    EvalResult<T> result;
    stream.begin_epoch(0);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < stream.batch_count(); ++b) {
        const PatchBatch batch = stream.batch(b, gt);
        Tape<T> tape;
        auto probs = forward(tape, params, batch_to_tensor<T>(batch));
        loss_sum += decomposed_loss<T>(probs->value, batch.labels,
                                       SmoothingParams{epsilon, Y});
        for (std::size_t i = 0; i < batch.batch; ++i) {
            const std::uint16_t pred = argmax_class(probs->value.data() + i * Y, Y);
            correct += (pred == batch.labels[i]);
            result.coords.push_back(batch.coords[i]);
            result.predictions.push_back(pred);
            result.truths.push_back(batch.labels[i]);
        }
        result.probs.insert(result.probs.end(), probs->value.begin(), probs->value.end());
    }
    const std::size_t n = result.predictions.size();
    if (n == 0) throw Error(ErrorCode::EmptySubset, "evaluate on empty stream");
    result.mean_loss = loss_sum / static_cast<double>(n);
    result.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

/// The epoch/batch loop: forward, smoothed cross-entropy (sum per batch),
/// backward, Adam. Validation runs at every epoch end and never influences
/// the trajectory. Returns the final-epoch parameters' logs.
template <typename T>
std::vector<EpochLog> train(ModelParams<T>& params, BatchStream& train_stream,
                            BatchStream& val_stream, const GroundTruth& gt,
                            const TrainConfig& config) {
    config.validate();
    const std::size_t Y = params.arch.num_classes;
    AdamState<T> adam(AdamHyper{config.learning_rate});
    std::uint64_t mix = config.seed;
    splitmix64(mix);
    Rng dropout_rng(mix ^ 0xd309ull);

    std::vector<EpochLog> logs;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        train_stream.begin_epoch(epoch);
        double loss_sum = 0.0;
        std::size_t correct = 0, seen = 0;
        for (std::size_t b = 0; b < train_stream.batch_count(); ++b) {
            const PatchBatch batch = train_stream.batch(b, gt);
            Tape<T> tape;
            auto probs = forward(tape, params, batch_to_tensor<T>(batch), config.dropout,
                                 &dropout_rng);
            const auto targets =
                config.hard_targets
                    ? one_hot_targets<T>(batch.labels, Y)
                    : smooth_targets<T>(batch.labels, SmoothingParams{config.epsilon, Y});
            auto loss = cross_entropy(tape, probs, targets, LossReduction::Sum);
            if (!std::isfinite(static_cast<double>(loss->value[0])))
                throw Error(ErrorCode::DivergedLoss,
                            "non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                std::to_string(b));
            params.zero_grads();
            tape.backward(loss);
            adam_step(params.tensors, adam);

            loss_sum += loss->value[0];
            for (std::size_t i = 0; i < batch.batch; ++i)
                correct += (argmax_class(probs->value.data() + i * Y, Y) == batch.labels[i]);
            seen += batch.batch;
        }

        EpochLog log;
        log.epoch = epoch;
        log.train_loss = loss_sum / static_cast<double>(seen);
        log.train_acc = static_cast<double>(correct) / static_cast<double>(seen);
        const auto val = evaluate(params, val_stream, gt, config.epsilon);
        log.val_loss = val.mean_loss;
        log.val_acc = val.accuracy;
        log.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        logs.push_back(log);
    }
    return logs;
}

}  // namespace hsic
