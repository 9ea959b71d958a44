#pragma once

#include "shelf/activelearn.hpp"
#include "shelf/config.hpp"
#include "shelf/textmap.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace shelf {

/// Encodings of a catalog's training and test images under one bank.
struct EncodingCache {
    std::string bank_hash;
    EncodedSet train;
    EncodedSet test;
};

void write_encodings(const std::filesystem::path& path, const EncodingCache& cache);
EncodingCache read_encodings(const std::filesystem::path& path);

struct ClassifyResult {
    int class_index = 0;
    std::string class_name;
    double score = 0.0;
    bool notified = false;
    std::string model_version;
    FeatureVector feature;  // empty for the baseline
};

nlohmann::json classify_json(const ClassifyResult& r);

/// Everything the classifier needs at query time, immutable once built.
struct ModelState {
    Variant variant = Variant::Full;
    std::vector<std::string> classes;
    DetectorBank bank;
    std::optional<SvmModel> svm;  // FULL and DP_SVM
    std::optional<BowModel> bow;  // BASELINE
    std::string version;

    ClassifyResult classify(const GrayImage& image, double tau) const;
    /// Decision rule on a pre-computed detector encoding (not for the baseline).
    Prediction decide(const FeatureVector& feature) const;
};

/// The artifact directory of one configuration: detector bank, models,
/// word index, feature cache and JSON run reports, each with a SHA-256 hash.
class Workspace {
public:
    explicit Workspace(PipelineConfig config);

    const PipelineConfig& config() const { return config_; }
    const Catalog& catalog();

    std::filesystem::path bank_path() const { return config_.workdir / "bank.bin"; }
    std::filesystem::path model_path(Variant v) const;
    std::filesystem::path index_path() const { return config_.workdir / "words.json"; }
    std::filesystem::path encodings_path() const { return config_.workdir / "features.bin"; }
    std::filesystem::path report_path(const std::string& name) const;

    /// Each step writes its artifact and a report, and returns the report.
    nlohmann::json mine();
    nlohmann::json train();
    nlohmann::json evaluate();
    nlohmann::json pr_curve();
    nlohmann::json build_index();
    nlohmann::json active_learn(const SplitSpec& spec, const ProtocolOptions& options);

    DetectorBank load_bank_artifact() const;
    /// Cached encodings; recomputed when the bank changed.
    const EncodingCache& encodings();
    /// Model for the configured variant, loaded from disk.
    std::shared_ptr<const ModelState> load_model_state();

private:
    void write_report(const std::string& name, const nlohmann::json& report) const;
    VariantOutcome test_outcome();

    PipelineConfig config_;
    std::optional<Catalog> catalog_;
    std::optional<EncodingCache> encodings_;
};

/// Version string of an artifact: the first 16 hex digits of its SHA-256.
std::string artifact_version(const std::filesystem::path& path);

}  // namespace shelf
