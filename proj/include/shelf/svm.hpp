#pragma once

#include "shelf/encoder.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shelf {

enum class Kernel { Linear, Rbf };

std::string kernel_name(Kernel kernel);
Kernel parse_kernel(const std::string& name);

struct SvmParams {
    Kernel kernel = Kernel::Rbf;
    double c = 2048.0;
    double gamma = 2.0;     // RBF width: k(a, b) = exp(-g * |a - b|^2)
    bool gamma_per_dimension = true;  // g = gamma / dim when set, else g = gamma
    bool standardize = false;
    double tolerance = 1e-5;  // maximal KKT violation at termination
    long max_iterations = 10'000'000;
    unsigned workers = 1;
};

/// Solution of one binary soft-margin dual problem
///   min 1/2 a'Qa - e'a  s.t. 0 <= a <= C, y'a = 0,  Q_ij = y_i y_j K_ij.
struct BinarySolution {
    std::vector<double> alpha;
    double bias = 0.0;  // f(x) = sum_i alpha_i y_i K(x_i, x) + bias
    long iterations = 0;
};

/// SMO with second-order working-set selection over a precomputed kernel matrix
/// (row-major n x n). Labels are +1 / -1.
BinarySolution solve_binary(std::span<const double> kernel, std::span<const int> labels, double c,
                            double tolerance = 1e-5, long max_iterations = 10'000'000);

double dual_objective(std::span<const double> kernel, std::span<const int> labels, std::span<const double> alpha);

/// One one-vs-rest decision function.
struct DecisionFunction {
    float bias = 0.0f;
    std::vector<std::uint32_t> support;  // indices into SvmModel::support_vectors
    std::vector<float> coef;             // alpha_i * y_i per support index
    std::vector<float> weights;          // linear kernel only, standardised space

    friend bool operator==(const DecisionFunction&, const DecisionFunction&) = default;
};

/// L one-vs-rest decision functions over FeatureVectors.
struct SvmModel {
    Kernel kernel = Kernel::Rbf;
    float c = 2048.0f;
    float gamma = 2.0f;  // effective kernel width
    bool standardized = false;
    FeatureMode mode = FeatureMode::Pyramid;
    std::vector<std::string> classes;
    std::vector<float> mean;   // standardisation, per feature
    std::vector<float> scale;  // 1 / stddev (1 when constant)
    std::vector<std::vector<float>> support_vectors;  // standardised
    std::vector<DecisionFunction> functions;

    std::size_t num_classes() const { return functions.size(); }
    std::size_t dimension() const { return mean.size(); }

    /// Throws Error(InvalidArgument) on a length mismatch.
    std::vector<double> decision_values(std::span<const float> features) const;

    friend bool operator==(const SvmModel&, const SvmModel&) = default;
};

struct Prediction {
    int label = 0;
    double score = 0.0;
};

/// Trains class c positive vs all others for each c. `classes` names the
/// labels 0..L-1; every class must have at least one sample.
SvmModel train_ovr(std::span<const FeatureVector> features, std::span<const int> labels,
                   const std::vector<std::string>& classes, const SvmParams& params);

/// Hyperparameters that reproduce `model` when passed back to train_ovr;
/// solver settings come from `solver`.
SvmParams params_of(const SvmModel& model, const SvmParams& solver = {});

Prediction predict(const SvmModel& model, const FeatureVector& feature);
Prediction predict_values(std::span<const double> decision_values);

/// The predicted class when its score exceeds tau; nullopt means "do not notify".
std::optional<int> predict_thresholded(const SvmModel& model, const FeatureVector& feature, double tau);

void write_model(std::ostream& out, const SvmModel& model);
SvmModel read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const SvmModel& model);
SvmModel load_model(const std::filesystem::path& path);

inline constexpr std::uint32_t kModelVersion = 1;

}  // namespace shelf
