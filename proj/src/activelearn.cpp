#include "shelf/activelearn.hpp"

#include "shelf/error.hpp"
#include "shelf/evaluate.hpp"
#include "shelf/parallel.hpp"
#include "shelf/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace shelf {

double confidence_of(std::span<const double> values, ConfidenceRule rule) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "no decision values");
    const Prediction p = predict_values(values);
    if (rule == ConfidenceRule::TopValue || values.size() < 2) return std::abs(p.score);
    double runner_up = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < values.size(); ++c)
        if (static_cast<int>(c) != p.label) runner_up = std::max(runner_up, values[c]);
    return p.score - runner_up;
}

std::vector<LabelQuery> select_uncertain(const SvmModel& model, std::span<const std::string> refs,
                                         std::span<const FeatureVector> pool, std::size_t k, ConfidenceRule rule) {
    if (pool.empty()) throw Error(ErrorCode::InvalidArgument, "empty labeling pool");
    if (refs.size() != pool.size()) throw Error(ErrorCode::InvalidArgument, "pool refs and features differ in length");
    if (k > pool.size())
        throw Error(ErrorCode::InvalidArgument,
                    "asked for " + std::to_string(k) + " items from a pool of " + std::to_string(pool.size()));
    std::vector<LabelQuery> all(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const auto values = model.decision_values(pool[i].values);
        all[i].ref = refs[i];
        all[i].pool_index = i;
        all[i].predicted = predict_values(values).label;
        all[i].confidence = confidence_of(values, rule);
    }
    std::stable_sort(all.begin(), all.end(), [](const LabelQuery& a, const LabelQuery& b) {
        if (a.confidence != b.confidence) return a.confidence < b.confidence;
        return a.ref < b.ref;
    });
    all.resize(k);
    return all;
}

SvmModel retrain(const SvmModel& model, std::span<const FeatureVector> base_features, std::span<const int> base_labels,
                 std::span<const FeatureVector> new_features, std::span<const int> new_labels,
                 const SvmParams& solver) {
    if (new_features.size() != new_labels.size())
        throw Error(ErrorCode::InvalidArgument, "new features and labels differ in length");
    for (int l : new_labels)
        if (l < 0 || static_cast<std::size_t>(l) >= model.classes.size())
            throw Error(ErrorCode::InvalidArgument, "label " + std::to_string(l) + " out of range");
    std::vector<FeatureVector> features(base_features.begin(), base_features.end());
    features.insert(features.end(), new_features.begin(), new_features.end());
    std::vector<int> labels(base_labels.begin(), base_labels.end());
    labels.insert(labels.end(), new_labels.begin(), new_labels.end());
    return train_ovr(features, labels, model.classes, params_of(model, solver));
}

namespace {

double accuracy_on(const SvmModel& model, std::span<const FeatureVector> pool, std::span<const int> pool_labels,
                   const std::vector<std::size_t>& testing) {
    std::vector<int> predictions;
    std::vector<int> truth;
    for (std::size_t i : testing) {
        predictions.push_back(predict(model, pool[i]).label);
        truth.push_back(pool_labels[i]);
    }
    return evaluate(predictions, truth, model.classes.size()).accuracy;
}

}  // namespace

LearningCurve run_protocol(std::span<const FeatureVector> base_features, std::span<const int> base_labels,
                           std::span<const FeatureVector> pool, std::span<const int> pool_labels,
                           const std::vector<std::string>& classes, const SvmParams& params, const SplitSpec& spec,
                           const ProtocolOptions& options) {
    if (pool.size() != pool_labels.size()) throw Error(ErrorCode::InvalidArgument, "pool features and labels differ");
    validate_split(spec, pool.size());
    if (spec.testing_size == 0) throw Error(ErrorCode::InvalidArgument, "protocol needs a non-empty testing set");

    std::vector<std::size_t> counts{0};
    while (counts.back() < spec.learning_size) counts.push_back(std::min(counts.back() + spec.step, spec.learning_size));

    SvmParams inner = params;
    inner.workers = 1;
    const SvmModel initial = train_ovr(base_features, base_labels, classes, inner);

    LearningCurve curve;
    curve.spec = spec;
    curve.runs.resize(spec.runs);
    std::vector<std::vector<double>> acc(spec.runs, std::vector<double>(counts.size()));
    parallel_for(spec.runs, options.workers, [&](std::size_t run) {
        const LearningSplit split = split_for_learning(pool.size(), spec, run);
        RunTrace& trace = curve.runs[run];
        trace.learning = split.learning;
        trace.testing = split.testing;

        std::vector<std::size_t> remaining = split.learning;
        std::vector<FeatureVector> new_features;
        std::vector<int> new_labels;
        SvmModel model = initial;
        Rng rng(spec.seed, 0x414c0000 + run);
        acc[run][0] = accuracy_on(model, pool, pool_labels, split.testing);
        for (std::size_t p = 1; p < counts.size(); ++p) {
            const std::size_t take = counts[p] - counts[p - 1];
            std::vector<std::size_t> chosen;
            if (options.selection == SelectionRule::Random) {
                rng.shuffle(remaining);
                chosen.assign(remaining.begin(), remaining.begin() + static_cast<std::ptrdiff_t>(take));
            } else {
                std::vector<std::string> refs;
                std::vector<FeatureVector> feats;
                for (std::size_t i : remaining) {
                    // Zero-padded so that ref order equals index order.
                    char ref[24];
                    std::snprintf(ref, sizeof ref, "%012zu", i);
                    refs.emplace_back(ref);
                    feats.push_back(pool[i]);
                }
                for (const auto& q : select_uncertain(model, refs, feats, take, options.confidence))
                    chosen.push_back(remaining[q.pool_index]);
            }
            for (std::size_t i : chosen) {
                new_features.push_back(pool[i]);
                new_labels.push_back(pool_labels[i]);
                trace.labeled.push_back(i);
            }
            std::erase_if(remaining, [&](std::size_t i) {
                return std::find(chosen.begin(), chosen.end(), i) != chosen.end();
            });
            std::sort(remaining.begin(), remaining.end());
            model = retrain(initial, base_features, base_labels, new_features, new_labels, inner);
            acc[run][p] = accuracy_on(model, pool, pool_labels, split.testing);
        }
    });

    for (std::size_t p = 0; p < counts.size(); ++p) {
        CurvePoint point;
        point.labeled = counts[p];
        for (std::size_t r = 0; r < spec.runs; ++r) point.per_run.push_back(acc[r][p]);
        const double n = static_cast<double>(spec.runs);
        point.mean = std::accumulate(point.per_run.begin(), point.per_run.end(), 0.0) / n;
        if (spec.runs > 1) {
            double ss = 0.0;
            for (double a : point.per_run) ss += (a - point.mean) * (a - point.mean);
            point.stddev = std::sqrt(ss / (n - 1.0));
        }
        curve.points.push_back(std::move(point));
    }
    return curve;
}

void write_curve_csv(std::ostream& out, const LearningCurve& curve) {
    out << "count,mean,std\n";
    for (const auto& p : curve.points) out << p.labeled << ',' << p.mean << ',' << p.stddev << '\n';
}

nlohmann::json curve_json(const LearningCurve& curve) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : curve.points)
        points.push_back({{"count", p.labeled}, {"mean", p.mean}, {"std", p.stddev}, {"per_run", p.per_run}});
    return {{"spec",
             {{"learning_size", curve.spec.learning_size},
              {"testing_size", curve.spec.testing_size},
              {"step", curve.spec.step},
              {"runs", curve.spec.runs},
              {"seed", curve.spec.seed}}},
            {"points", points}};
}

std::string status_name(LabelStatus status) {
    switch (status) {
        case LabelStatus::Pending: return "pending";
        case LabelStatus::Labeled: return "labeled";
        case LabelStatus::Skipped: return "skipped";
    }
    return "pending";
}

}  // namespace shelf
