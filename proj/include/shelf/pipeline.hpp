#pragma once

#include "shelf/bow.hpp"
#include "shelf/dataset.hpp"
#include "shelf/encoder.hpp"
#include "shelf/evaluate.hpp"
#include "shelf/patchmine.hpp"
#include "shelf/svm.hpp"

#include <string>
#include <vector>

namespace shelf {

/// Classification variants: encoder mode x decision rule.
enum class Variant {
    Full,       // pyramid encoding + SVM
    DpSvm,      // whole-image encoding + SVM
    DpHs,       // whole-image encoding, class of the highest pooled score
    DpPyrHs,    // pyramid encoding, highest score over all 5 regions
    Baseline,   // bag of local descriptors + SVM
};

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);
FeatureMode variant_mode(Variant v);
bool variant_uses_svm(Variant v);

/// Grids for every training image, per class, at all mining scales.
std::vector<std::vector<ImageGrids>> training_grids(const Catalog& catalog, const MiningParams& params);

DetectorBank mine_catalog(const Catalog& catalog, const MiningParams& params);

/// Whole-image and pyramid encodings of a set of images from one detector pass each.
struct EncodedSet {
    std::vector<std::string> refs;
    std::vector<int> labels;
    std::vector<FeatureVector> whole;
    std::vector<FeatureVector> pyramid;

    const std::vector<FeatureVector>& features(FeatureMode mode) const {
        return mode == FeatureMode::Pyramid ? pyramid : whole;
    }
    std::size_t size() const { return refs.size(); }
};

EncodedSet encode_training_set(const Catalog& catalog, const DetectorBank& bank, unsigned workers = 1);
EncodedSet encode_test_set(const Catalog& catalog, const DetectorBank& bank, unsigned workers = 1);

/// Highest-score decision for every vector; abstentions fall back to the
/// lowest class index, matching the tie rule.
Prediction highest_score_prediction(const FeatureVector& v, float floor);

struct VariantOutcome {
    std::vector<int> predictions;
    std::vector<double> scores;
    EvalReport report;
};

/// Runs one detector-based variant on pre-encoded sets.
VariantOutcome run_detector_variant(Variant variant, const EncodedSet& train, const EncodedSet& test,
                                    const std::vector<std::string>& classes, float floor, const SvmParams& svm,
                                    SvmModel* trained = nullptr);

VariantOutcome run_baseline(const Catalog& catalog, const BowParams& params, BowModel* trained = nullptr);

}  // namespace shelf
