#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace shelf {

struct LinearSvmOptions {
    double c = 0.1;
    /// Multiplier on C for positives; compensates few cluster members against
    /// many negative windows.
    double positive_weight = 1.0;
    double tolerance = 1e-3;
    int max_epochs = 1000;
    std::uint64_t seed = 0;
};

struct LinearSvm {
    std::vector<float> weights;
    float bias = 0.0f;
    int epochs = 0;

    double score(std::span<const float> x) const;
};

/// Hinge-loss linear SVM trained by dual coordinate descent with the bias
/// folded in as a constant feature. Throws Error(Degenerate) when every
/// positive also occurs verbatim among the negatives.
LinearSvm train_linear_svm(std::span<const std::vector<float>> positives,
                           std::span<const std::vector<float>> negatives, const LinearSvmOptions& options);

}  // namespace shelf
