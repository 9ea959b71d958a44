#include "shelf/evaluate.hpp"

#include "shelf/error.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>

namespace shelf {

EvalReport evaluate(std::span<const int> predictions, std::span<const int> truth, std::size_t num_classes) {
    if (predictions.empty()) throw Error(ErrorCode::InvalidArgument, "cannot evaluate an empty prediction list");
    if (predictions.size() != truth.size())
        throw Error(ErrorCode::InvalidArgument, "predictions and ground truth differ in length");
    EvalReport r;
    r.correct.assign(num_classes, 0);
    r.totals.assign(num_classes, 0);
    std::vector<std::vector<int>> counts(num_classes, std::vector<int>(num_classes, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i];
        const int p = predictions[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes || static_cast<std::size_t>(p) >= num_classes)
            throw Error(ErrorCode::InvalidArgument, "class index out of range in evaluation");
        ++r.totals[t];
        ++counts[t][p];
        if (t == p) ++r.correct[t];
    }
    r.empty_class.assign(num_classes, false);
    r.confusion.assign(num_classes, std::vector<double>(num_classes, 0.0));
    double sum = 0.0;
    int present = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (r.totals[c] == 0) {
            r.empty_class[c] = true;
            continue;
        }
        ++present;
        sum += static_cast<double>(r.correct[c]) / r.totals[c];
        for (std::size_t p = 0; p < num_classes; ++p)
            r.confusion[c][p] = static_cast<double>(counts[c][p]) / r.totals[c];
    }
    r.accuracy = present > 0 ? sum / present : 0.0;
    return r;
}

std::vector<PrPoint> pr_curve(std::span<const int> predictions, std::span<const double> scores,
                              std::span<const int> truth, std::span<const double> taus) {
    if (predictions.size() != scores.size() || predictions.size() != truth.size())
        throw Error(ErrorCode::InvalidArgument, "pr_curve inputs differ in length");
    if (predictions.empty()) throw Error(ErrorCode::InvalidArgument, "pr_curve needs a non-empty test set");
    if (!std::is_sorted(taus.begin(), taus.end())) throw Error(ErrorCode::InvalidArgument, "tau grid must be ascending");
    std::vector<PrPoint> curve;
    curve.reserve(taus.size());
    for (double tau : taus) {
        std::size_t attempted = 0;
        std::size_t correct = 0;
        for (std::size_t i = 0; i < scores.size(); ++i) {
            if (!(scores[i] > tau)) continue;
            ++attempted;
            if (predictions[i] == truth[i]) ++correct;
        }
        PrPoint p;
        p.tau = tau;
        p.attempted = attempted;
        p.precision = attempted == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(attempted);
        p.recall = static_cast<double>(correct) / static_cast<double>(scores.size());
        curve.push_back(p);
    }
    return curve;
}

std::vector<double> tau_grid(std::span<const double> scores) {
    std::vector<double> taus(scores.begin(), scores.end());
    taus.push_back(-std::numeric_limits<double>::infinity());
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
    return taus;
}

double operating_point(std::span<const PrPoint> curve, double min_precision) {
    double tau = std::numeric_limits<double>::infinity();
    for (std::size_t i = curve.size(); i-- > 0;) {
        if (curve[i].precision < min_precision) break;
        if (curve[i].attempted > 0) tau = curve[i].tau;
    }
    return tau;
}

nlohmann::json report_json(const EvalReport& report, const std::vector<std::string>& classes) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t c = 0; c < report.totals.size(); ++c) {
        nlohmann::json row = {{"class", c < classes.size() ? classes[c] : std::to_string(c)},
                              {"correct", report.correct[c]},
                              {"total", report.totals[c]},
                              {"empty", static_cast<bool>(report.empty_class[c])}};
        row["accuracy"] = report.totals[c] > 0 ? nlohmann::json(static_cast<double>(report.correct[c]) / report.totals[c])
                                               : nlohmann::json(nullptr);
        rows.push_back(row);
    }
    return {{"accuracy", report.accuracy}, {"per_class", rows}, {"confusion", report.confusion}};
}

void write_confusion_csv(std::ostream& out, const EvalReport& report, const std::vector<std::string>& classes) {
    out << "truth";
    for (const auto& c : classes) out << ',' << c;
    out << '\n' << std::setprecision(10);
    for (std::size_t r = 0; r < report.confusion.size(); ++r) {
        out << classes[r];
        for (double v : report.confusion[r]) out << ',' << v;
        out << '\n';
    }
}

void write_pr_csv(std::ostream& out, std::span<const PrPoint> curve) {
    out << "tau,precision,recall,attempted\n" << std::setprecision(12);
    for (const auto& p : curve) out << p.tau << ',' << p.precision << ',' << p.recall << ',' << p.attempted << '\n';
}

}  // namespace shelf
