#pragma once

#include <iosfwd>
#include <limits>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

namespace shelf {

/// Per-class accuracy summary and row-normalised confusion matrix.
struct EvalReport {
    std::vector<int> correct;  // k_i
    std::vector<int> totals;   // n_i
    std::vector<bool> empty_class;  // n_i == 0; excluded from the mean
    double accuracy = 0.0;     // mean over classes with n_i > 0 of k_i / n_i
    std::vector<std::vector<double>> confusion;  // rows = truth, cols = prediction
};

/// Mean per-class accuracy. Throws on empty or mismatched input, or an index >= L.
EvalReport evaluate(std::span<const int> predictions, std::span<const int> truth, std::size_t num_classes);

struct PrPoint {
    double tau = 0.0;
    double precision = 1.0;
    double recall = 0.0;
    std::size_t attempted = 0;
};

/// At each tau: attempted = images whose score exceeds tau; precision =
/// correct / attempted (1 when nothing is attempted); recall = correct / all.
std::vector<PrPoint> pr_curve(std::span<const int> predictions, std::span<const double> scores,
                              std::span<const int> truth, std::span<const double> taus);

/// Sorted thresholds covering every distinct score plus -inf and the maximum.
std::vector<double> tau_grid(std::span<const double> scores);

/// Smallest tau on the curve whose precision reaches `min_precision` and stays
/// at or above it for every larger tau; +inf when none does.
double operating_point(std::span<const PrPoint> curve, double min_precision);

nlohmann::json report_json(const EvalReport& report, const std::vector<std::string>& classes);
void write_confusion_csv(std::ostream& out, const EvalReport& report, const std::vector<std::string>& classes);
void write_pr_csv(std::ostream& out, std::span<const PrPoint> curve);

}  // namespace shelf
