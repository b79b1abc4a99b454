#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "hsic/tensor.hpp"

namespace hsic {

struct GradCheckEntry {
    std::string name;
    double max_rel_error = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double tolerance = 1e-4;
    double max_rel_error = 0.0;
    bool passed = true;
};

/// Central finite-difference check of analytic gradients at 64-bit precision.
/// `loss_fn` must rebuild the graph from the given leaves on every call and
/// return the scalar loss value. Step h = 1e-4 * max(1, |x|); relative error
/// denominator max(|analytic|, |numeric|, 1e-8).
inline GradCheckReport gradcheck(
    std::span<const TensorPtr<double>> leaves,
    const std::function<double(bool compute_grads)>& loss_fn, double tolerance = 1e-4) {
    GradCheckReport report;
    report.tolerance = tolerance;

    for (const auto& leaf : leaves) leaf->zero_grad();
    loss_fn(/*compute_grads=*/true);

    for (const auto& leaf : leaves) {
        GradCheckEntry entry;
        entry.name = leaf->name.empty() ? shape_to_string(leaf->shape) : leaf->name;
        for (std::size_t i = 0; i < leaf->numel(); ++i) {
            const double x = leaf->value[i];
            const double h = 1e-4 * std::max(1.0, std::abs(x));
            leaf->value[i] = x + h;
            const double plus = loss_fn(false);
            leaf->value[i] = x - h;
            const double minus = loss_fn(false);
            leaf->value[i] = x;
            const double numeric = (plus - minus) / (2.0 * h);
            const double analytic = leaf->grad[i];
            const double denom =
                std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            const double rel = std::abs(analytic - numeric) / denom;
            entry.max_rel_error = std::max(entry.max_rel_error, rel);
        }
        report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
        report.entries.push_back(std::move(entry));
    }
    report.passed = report.max_rel_error <= tolerance;
    return report;
}

}  // namespace hsic
