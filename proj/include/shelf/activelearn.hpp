#pragma once

#include "shelf/dataset.hpp"
#include "shelf/encoder.hpp"
#include "shelf/svm.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace shelf {

/// How confident the classifier is about one pool item.
enum class ConfidenceRule {
    TopValue,  // |decision value of the predicted class|
    Margin,    // predicted value minus runner-up value
};

enum class SelectionRule { Uncertainty, Random };

enum class LabelStatus { Pending, Labeled, Skipped };

struct LabelQuery {
    std::string ref;
    std::size_t pool_index = 0;
    int predicted = 0;
    double confidence = 0.0;
    LabelStatus status = LabelStatus::Pending;
    int label = -1;  // set when status is Labeled
};

double confidence_of(std::span<const double> decision_values, ConfidenceRule rule);

/// The k least confident pool items, ascending by confidence; ties keep ref order.
/// Throws InvalidArgument for an empty pool, k > pool size or mismatched refs.
std::vector<LabelQuery> select_uncertain(const SvmModel& model, std::span<const std::string> refs,
                                         std::span<const FeatureVector> pool, std::size_t k,
                                         ConfidenceRule rule = ConfidenceRule::TopValue);

/// Full retrain of train_ovr on base plus newly labeled samples with the model's hyperparameters.
SvmModel retrain(const SvmModel& model, std::span<const FeatureVector> base_features, std::span<const int> base_labels,
                 std::span<const FeatureVector> new_features, std::span<const int> new_labels,
                 const SvmParams& solver = {});

struct CurvePoint {
    std::size_t labeled = 0;
    double mean = 0.0;
    double stddev = 0.0;              // sample standard deviation over runs
    std::vector<double> per_run;
};

/// What one protocol run consumed, for auditing.
struct RunTrace {
    std::vector<std::size_t> learning;
    std::vector<std::size_t> testing;
    std::vector<std::size_t> labeled;  // pool indices in reveal order
};

struct LearningCurve {
    SplitSpec spec;
    std::vector<CurvePoint> points;
    std::vector<RunTrace> runs;
};

struct ProtocolOptions {
    SelectionRule selection = SelectionRule::Uncertainty;
    ConfidenceRule confidence = ConfidenceRule::TopValue;
    unsigned workers = 1;
};

/// The labeling experiment: per run, split the pool, then repeatedly label
/// `step` items from the learning part, retrain, and score the testing part.
/// `base` supplies the initial training data and hyperparameters.
LearningCurve run_protocol(std::span<const FeatureVector> base_features, std::span<const int> base_labels,
                           std::span<const FeatureVector> pool, std::span<const int> pool_labels,
                           const std::vector<std::string>& classes, const SvmParams& params, const SplitSpec& spec,
                           const ProtocolOptions& options = {});

void write_curve_csv(std::ostream& out, const LearningCurve& curve);
nlohmann::json curve_json(const LearningCurve& curve);

std::string status_name(LabelStatus status);

}  // namespace shelf
