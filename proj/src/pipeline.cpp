#include "shelf/pipeline.hpp"

#include "shelf/error.hpp"
#include "shelf/parallel.hpp"

#include <spdlog/spdlog.h>

namespace shelf {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Full: return "FULL";
        case Variant::DpSvm: return "DP_SVM";
        case Variant::DpHs: return "DP_HS";
        case Variant::DpPyrHs: return "DP_PYR_HS";
        case Variant::Baseline: return "BASELINE";
    }
    return "FULL";
}

Variant parse_variant(const std::string& name) {
    for (Variant v : {Variant::Full, Variant::DpSvm, Variant::DpHs, Variant::DpPyrHs, Variant::Baseline})
        if (variant_name(v) == name) return v;
    throw Error(ErrorCode::InvalidArgument, "unknown variant: " + name);
}

FeatureMode variant_mode(Variant v) {
    return v == Variant::Full || v == Variant::DpPyrHs ? FeatureMode::Pyramid : FeatureMode::Whole;
}

bool variant_uses_svm(Variant v) { return v == Variant::Full || v == Variant::DpSvm || v == Variant::Baseline; }

std::vector<std::vector<ImageGrids>> training_grids(const Catalog& catalog, const MiningParams& params) {
    std::vector<std::vector<ImageGrids>> grids(catalog.num_classes());
    for (std::size_t c = 0; c < catalog.num_classes(); ++c) {
        grids[c].resize(catalog.train_images[c].size());
        parallel_for(grids[c].size(), params.workers, [&](std::size_t i) {
            grids[c][i] = compute_grids(catalog.load_train(catalog.train_images[c][i]), params.pyramid_levels,
                                        params.pyramid_factor);
        });
    }
    return grids;
}

DetectorBank mine_catalog(const Catalog& catalog, const MiningParams& params) {
    const auto grids = training_grids(catalog, params);
    return mine_bank(grids, params);
}

namespace {

EncodedSet encode_images(const Catalog& catalog, const DetectorBank& bank, std::vector<std::string> refs,
                         std::vector<int> labels, bool test, unsigned workers) {
    EncodedSet set;
    set.whole.resize(refs.size());
    set.pyramid.resize(refs.size());
    // Images in parallel; each encoding is serial so results do not depend on workers.
    parallel_for(refs.size(), workers, [&](std::size_t i) {
        const GrayImage img = test ? catalog.load_test(refs[i]) : catalog.load_train(refs[i]);
        auto [whole, pyramid] = encode_both(img, bank, 1);
        set.whole[i] = std::move(whole);
        set.pyramid[i] = std::move(pyramid);
    });
    set.refs = std::move(refs);
    set.labels = std::move(labels);
    return set;
}

}  // namespace

EncodedSet encode_training_set(const Catalog& catalog, const DetectorBank& bank, unsigned workers) {
    std::vector<std::string> refs;
    std::vector<int> labels;
    for (std::size_t c = 0; c < catalog.num_classes(); ++c)
        for (const auto& ref : catalog.train_images[c]) {
            refs.push_back(ref);
            labels.push_back(static_cast<int>(c));
        }
    return encode_images(catalog, bank, std::move(refs), std::move(labels), false, workers);
}

EncodedSet encode_test_set(const Catalog& catalog, const DetectorBank& bank, unsigned workers) {
    std::vector<std::string> refs;
    std::vector<int> labels;
    for (const auto& t : catalog.test_images) {
        refs.push_back(t.ref);
        labels.push_back(t.label);
    }
    return encode_images(catalog, bank, std::move(refs), std::move(labels), true, workers);
}

Prediction highest_score_prediction(const FeatureVector& v, float floor) {
    const auto cls = highest_score_class(v, floor);
    Prediction p;
    p.label = cls.value_or(0);
    const std::size_t l = v.num_classes();
    const std::size_t regions = v.mode == FeatureMode::Pyramid ? kPyramidRegions : 1;
    p.score = v.values[static_cast<std::size_t>(p.label)];
    for (std::size_t r = 1; r < regions; ++r)
        p.score = std::max(p.score, static_cast<double>(v.values[r * l + static_cast<std::size_t>(p.label)]));
    return p;
}

VariantOutcome run_detector_variant(Variant variant, const EncodedSet& train, const EncodedSet& test,
                                    const std::vector<std::string>& classes, float floor, const SvmParams& svm,
                                    SvmModel* trained) {
    if (variant == Variant::Baseline) throw Error(ErrorCode::InvalidArgument, "baseline is not a detector variant");
    const FeatureMode mode = variant_mode(variant);
    VariantOutcome out;
    if (variant_uses_svm(variant)) {
        SvmModel model = train_ovr(train.features(mode), train.labels, classes, svm);
        for (const auto& f : test.features(mode)) {
            const Prediction p = predict(model, f);
            out.predictions.push_back(p.label);
            out.scores.push_back(p.score);
        }
        if (trained) *trained = std::move(model);
    } else {
        for (const auto& f : test.features(mode)) {
            const Prediction p = highest_score_prediction(f, floor);
            out.predictions.push_back(p.label);
            out.scores.push_back(p.score);
        }
    }
    out.report = evaluate(out.predictions, test.labels, classes.size());
    return out;
}

VariantOutcome run_baseline(const Catalog& catalog, const BowParams& params, BowModel* trained) {
    std::vector<GrayImage> images;
    std::vector<int> labels;
    for (std::size_t c = 0; c < catalog.num_classes(); ++c)
        for (const auto& ref : catalog.train_images[c]) {
            images.push_back(catalog.load_train(ref));
            labels.push_back(static_cast<int>(c));
        }
    BowModel model = bow_baseline_train(images, labels, catalog.classes, params);
    VariantOutcome out;
    std::vector<int> truth;
    for (const auto& t : catalog.test_images) {
        const Prediction p = bow_predict(model, catalog.load_test(t.ref));
        out.predictions.push_back(p.label);
        out.scores.push_back(p.score);
        truth.push_back(t.label);
    }
    out.report = evaluate(out.predictions, truth, catalog.num_classes());
    if (trained) *trained = std::move(model);
    return out;
}

}  // namespace shelf
