#include "shelf/workspace.hpp"

#include "shelf/bank_io.hpp"
#include "shelf/binary_io.hpp"
#include "shelf/error.hpp"
#include "shelf/hashing.hpp"

#include <spdlog/spdlog.h>

#include <fstream>

namespace fs = std::filesystem;

namespace shelf {

namespace {

constexpr std::uint32_t kEncodingVersion = 1;

void put_set(std::ostream& out, const EncodedSet& set) {
    binio::put_u32(out, static_cast<std::uint32_t>(set.size()));
    for (std::size_t i = 0; i < set.size(); ++i) {
        binio::put_string(out, set.refs[i]);
        binio::put_u32(out, static_cast<std::uint32_t>(set.labels[i]));
        binio::put_u32(out, static_cast<std::uint32_t>(set.whole[i].values.size()));
        binio::put_floats(out, set.whole[i].values);
        binio::put_floats(out, set.pyramid[i].values);
    }
}

EncodedSet get_set(std::istream& in) {
    EncodedSet set;
    const auto n = binio::get_u32(in);
    for (std::uint32_t i = 0; i < n; ++i) {
        set.refs.push_back(binio::get_string(in));
        set.labels.push_back(static_cast<int>(binio::get_u32(in)));
        const auto l = binio::get_u32(in);
        if (l > 1'000'000) throw Error(ErrorCode::Format, "implausible encoding length");
        set.whole.push_back({FeatureMode::Whole, binio::get_floats(in, l)});
        set.pyramid.push_back({FeatureMode::Pyramid, binio::get_floats(in, static_cast<std::size_t>(l) * kPyramidRegions)});
    }
    return set;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << text;
}

}  // namespace

void write_encodings(const fs::path& path, const EncodingCache& cache) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write("SHFC", 4);
    binio::put_u32(out, kEncodingVersion);
    binio::put_string(out, cache.bank_hash);
    put_set(out, cache.train);
    put_set(out, cache.test);
}

EncodingCache read_encodings(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
    binio::expect_magic(in, "SHFC");
    if (binio::get_u32(in) != kEncodingVersion) throw Error(ErrorCode::Format, "unsupported encoding cache version");
    EncodingCache cache;
    cache.bank_hash = binio::get_string(in);
    cache.train = get_set(in);
    cache.test = get_set(in);
    return cache;
}

std::string artifact_version(const fs::path& path) { return sha256_file(path).substr(0, 16); }

nlohmann::json classify_json(const ClassifyResult& r) {
    return {{"class", r.class_name},
            {"class_index", r.class_index},
            {"score", r.score},
            {"notified", r.notified},
            {"model_version", r.model_version}};
}

Prediction ModelState::decide(const FeatureVector& feature) const {
    if (svm) return predict(*svm, feature);
    if (variant == Variant::DpHs || variant == Variant::DpPyrHs)
        return highest_score_prediction(feature, bank.fire_threshold());
    throw Error(ErrorCode::Unavailable, "no classifier loaded for " + variant_name(variant));
}

ClassifyResult ModelState::classify(const GrayImage& image, double tau) const {
    ClassifyResult r;
    Prediction p;
    if (variant == Variant::Baseline) {
        if (!bow) throw Error(ErrorCode::Unavailable, "baseline model not loaded");
        p = bow_predict(*bow, image);
    } else {
        if (bank.empty()) throw Error(ErrorCode::Unavailable, "detector bank not loaded");
        r.feature = encode(image, bank, variant_mode(variant));
        p = decide(r.feature);
    }
    r.class_index = p.label;
    r.class_name = classes.at(static_cast<std::size_t>(p.label));
    r.score = p.score;
    r.notified = p.score > tau;
    r.model_version = version;
    return r;
}

Workspace::Workspace(PipelineConfig config) : config_(std::move(config)) {
    validate_config(config_);
    fs::create_directories(config_.workdir / "reports");
}

const Catalog& Workspace::catalog() {
    if (!catalog_) {
        if (config_.dataset.empty()) throw Error(ErrorCode::InvalidArgument, "config key 'dataset' is not set");
        catalog_ = load_catalog(config_.dataset);
    }
    return *catalog_;
}

fs::path Workspace::model_path(Variant v) const {
    return config_.workdir / (v == Variant::Baseline ? "bow.bin" : "model_" + variant_name(v) + ".bin");
}

fs::path Workspace::report_path(const std::string& name) const { return config_.workdir / "reports" / (name + ".json"); }

void Workspace::write_report(const std::string& name, const nlohmann::json& report) const {
    write_text(report_path(name), report.dump(2) + "\n");
}

DetectorBank Workspace::load_bank_artifact() const {
    if (!fs::exists(bank_path())) throw Error(ErrorCode::NotFound, "no detector bank at " + bank_path().string() + "; run mine first");
    return load_bank(bank_path());
}

nlohmann::json Workspace::mine() {
    const DetectorBank bank = mine_catalog(catalog(), config_.mining());
    save_bank(bank_path(), bank);
    nlohmann::json per_class = nlohmann::json::object();
    for (std::size_t c = 0; c < bank.classes.size(); ++c) per_class[catalog().classes[c]] = bank.classes[c].size();
    nlohmann::json report = {{"command", "mine"},
                             {"detectors", bank.size()},
                             {"per_class", per_class},
                             {"bank", bank_path().filename().string()},
                             {"bank_sha256", sha256_file(bank_path())},
                             {"seed", config_.seed}};
    write_report("mine", report);
    return report;
}

const EncodingCache& Workspace::encodings() {
    if (!fs::exists(bank_path())) throw Error(ErrorCode::NotFound, "no detector bank at " + bank_path().string() + "; run mine first");
    const std::string hash = sha256_file(bank_path());
    if (encodings_ && encodings_->bank_hash == hash) return *encodings_;
    if (fs::exists(encodings_path())) {
        try {
            EncodingCache cached = read_encodings(encodings_path());
            if (cached.bank_hash == hash) {
                encodings_ = std::move(cached);
                return *encodings_;
            }
        } catch (const Error& e) {
            spdlog::warn("ignoring unreadable feature cache: {}", e.what());
        }
    }
    const DetectorBank bank = load_bank(bank_path());
    EncodingCache cache;
    cache.bank_hash = hash;
    cache.train = encode_training_set(catalog(), bank, config_.workers);
    cache.test = encode_test_set(catalog(), bank, config_.workers);
    write_encodings(encodings_path(), cache);
    encodings_ = std::move(cache);
    return *encodings_;
}

nlohmann::json Workspace::train() {
    const Variant v = config_.variant;
    nlohmann::json report = {{"command", "train"}, {"variant", variant_name(v)}};
    if (v == Variant::Baseline) {
        BowModel model;
        run_baseline(catalog(), config_.bow(), &model);
        save_bow(model_path(v), model);
    } else if (variant_uses_svm(v)) {
        const auto& enc = encodings();
        const SvmModel model = train_ovr(enc.train.features(variant_mode(v)), enc.train.labels, catalog().classes,
                                         config_.svm());
        save_model(model_path(v), model);
        report["support_vectors"] = model.support_vectors.size();
    } else {
        report["note"] = "highest-score variants have no trained classifier";
        write_report("train", report);
        return report;
    }
    report["model"] = model_path(v).filename().string();
    report["model_sha256"] = sha256_file(model_path(v));
    write_report("train", report);
    return report;
}

VariantOutcome Workspace::test_outcome() {
    const Variant v = config_.variant;
    if (v == Variant::Baseline) {
        if (!fs::exists(model_path(v))) throw Error(ErrorCode::NotFound, "no baseline model; run train first");
        const BowModel model = load_bow(model_path(v));
        VariantOutcome out;
        std::vector<int> truth;
        for (const auto& t : catalog().test_images) {
            const Prediction p = bow_predict(model, catalog().load_test(t.ref));
            out.predictions.push_back(p.label);
            out.scores.push_back(p.score);
            truth.push_back(t.label);
        }
        out.report = shelf::evaluate(out.predictions, truth, catalog().num_classes());
        return out;
    }
    const auto& enc = encodings();
    VariantOutcome out;
    if (variant_uses_svm(v)) {
        if (!fs::exists(model_path(v))) throw Error(ErrorCode::NotFound, "no " + variant_name(v) + " model; run train first");
        const SvmModel model = load_model(model_path(v));
        for (const auto& f : enc.test.features(variant_mode(v))) {
            const Prediction p = predict(model, f);
            out.predictions.push_back(p.label);
            out.scores.push_back(p.score);
        }
    } else {
        const float floor = load_bank_artifact().fire_threshold();
        for (const auto& f : enc.test.features(variant_mode(v))) {
            const Prediction p = highest_score_prediction(f, floor);
            out.predictions.push_back(p.label);
            out.scores.push_back(p.score);
        }
    }
    out.report = shelf::evaluate(out.predictions, enc.test.labels, catalog().num_classes());
    return out;
}

nlohmann::json Workspace::evaluate() {
    const VariantOutcome out = test_outcome();
    const fs::path csv = config_.workdir / ("confusion_" + variant_name(config_.variant) + ".csv");
    {
        std::ofstream f(csv);
        write_confusion_csv(f, out.report, catalog().classes);
    }
    nlohmann::json report = report_json(out.report, catalog().classes);
    report["command"] = "evaluate";
    report["variant"] = variant_name(config_.variant);
    report["confusion_csv"] = csv.filename().string();
    report["confusion_sha256"] = sha256_file(csv);
    if (fs::exists(bank_path())) report["bank_sha256"] = sha256_file(bank_path());
    if (fs::exists(model_path(config_.variant))) report["model_sha256"] = sha256_file(model_path(config_.variant));
    write_report("evaluate_" + variant_name(config_.variant), report);
    return report;
}

nlohmann::json Workspace::pr_curve() {
    const VariantOutcome out = test_outcome();
    std::vector<int> truth;
    for (const auto& t : catalog().test_images) truth.push_back(t.label);
    const auto curve = shelf::pr_curve(out.predictions, out.scores, truth, tau_grid(out.scores));
    const fs::path csv = config_.workdir / ("pr_" + variant_name(config_.variant) + ".csv");
    {
        std::ofstream f(csv);
        write_pr_csv(f, curve);
    }
    const double op = operating_point(curve, 0.9);
    nlohmann::json report = {{"command", "pr-curve"},
                             {"variant", variant_name(config_.variant)},
                             {"points", curve.size()},
                             {"csv", csv.filename().string()},
                             {"csv_sha256", sha256_file(csv)},
                             {"tau_at_90_precision", std::isfinite(op) ? nlohmann::json(op) : nlohmann::json(nullptr)}};
    write_report("pr_" + variant_name(config_.variant), report);
    return report;
}

nlohmann::json Workspace::build_index() {
    auto ocr = SyntheticOcr::from_catalog(catalog());
    const GradientDensityScorer scorer;
    const WordClassIndex index = build_word_index(catalog(), *ocr, scorer, config_.workers);
    index.save(index_path());
    std::size_t tokens = 0;
    for (std::size_t c = 0; c < index.num_classes(); ++c) tokens += index.histogram(c).size();
    nlohmann::json report = {{"command", "build-index"},
                             {"index", index_path().filename().string()},
                             {"index_sha256", sha256_file(index_path())},
                             {"class_token_pairs", tokens}};
    write_report("build_index", report);
    return report;
}

nlohmann::json Workspace::active_learn(const SplitSpec& spec, const ProtocolOptions& options) {
    const Variant v = config_.variant;
    if (!variant_uses_svm(v) || v == Variant::Baseline)
        throw Error(ErrorCode::InvalidArgument, "active learning needs an SVM variant over detector encodings (FULL or DP_SVM)");
    const auto& enc = encodings();
    const FeatureMode mode = variant_mode(v);
    const LearningCurve curve = run_protocol(enc.train.features(mode), enc.train.labels, enc.test.features(mode),
                                             enc.test.labels, catalog().classes, config_.svm(), spec, options);
    const fs::path csv = config_.workdir / "learning_curve.csv";
    {
        std::ofstream f(csv);
        write_curve_csv(f, curve);
    }
    nlohmann::json report = curve_json(curve);
    report["command"] = "active-learn";
    report["variant"] = variant_name(v);
    report["selection"] = options.selection == SelectionRule::Random ? "random" : "uncertainty";
    report["csv"] = csv.filename().string();
    write_text(config_.workdir / "learning_curve.json", report.dump(2) + "\n");
    write_report("active_learn", report);
    return report;
}

std::shared_ptr<const ModelState> Workspace::load_model_state() {
    auto state = std::make_shared<ModelState>();
    state->variant = config_.variant;
    if (config_.variant == Variant::Baseline) {
        if (!fs::exists(model_path(config_.variant))) throw Error(ErrorCode::NotFound, "no baseline model; run train first");
        state->bow = load_bow(model_path(config_.variant));
        state->classes = state->bow->svm.classes;
        state->version = artifact_version(model_path(config_.variant));
        return state;
    }
    state->bank = load_bank_artifact();
    if (variant_uses_svm(config_.variant)) {
        if (!fs::exists(model_path(config_.variant)))
            throw Error(ErrorCode::NotFound, "no " + variant_name(config_.variant) + " model; run train first");
        state->svm = load_model(model_path(config_.variant));
        state->classes = state->svm->classes;
        state->version = artifact_version(model_path(config_.variant));
    } else {
        state->classes = catalog().classes;
        state->version = artifact_version(bank_path());
    }
    return state;
}

}  // namespace shelf
