#include "shelf/service.hpp"

#include "shelf/error.hpp"
#include "shelf/hashing.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <sstream>

namespace shelf {

namespace {

ApiResponse error_response(int status, const std::string& message) { return {status, {{"error", message}}}; }

std::int64_t now_seconds() {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

std::optional<std::size_t> parse_index(const std::string& s) {
    if (s.empty() || s.size() > 9) return std::nullopt;
    for (char c : s)
        if (c < '0' || c > '9') return std::nullopt;
    return static_cast<std::size_t>(std::stoul(s));
}

std::string model_hash(const SvmModel& model) {
    std::ostringstream out;
    write_model(out, model);
    return sha256_hex(out.str()).substr(0, 16);
}

}  // namespace

std::string entry_state_name(EntryState s) {
    switch (s) {
        case EntryState::Auto: return "auto";
        case EntryState::Chosen: return "chosen";
        case EntryState::Pending: return "pending";
        case EntryState::Unknown: return "unknown";
    }
    return "unknown";
}

Service::Service(double default_tau) : default_tau_(default_tau) {}

void Service::set_model(std::shared_ptr<const ModelState> model) { model_.store(std::move(model)); }

void Service::set_index(WordClassIndex index) { index_ = std::make_shared<const WordClassIndex>(std::move(index)); }

void Service::set_training_data(std::vector<FeatureVector> features, std::vector<int> labels) {
    if (features.size() != labels.size()) throw Error(ErrorCode::InvalidArgument, "training features and labels differ");
    base_features_ = std::move(features);
    base_labels_ = std::move(labels);
}

std::string Service::add_to_pool(const std::string& ref, FeatureVector feature) {
    std::lock_guard lock(pool_mutex_);
    PoolItem item;
    item.id = "q" + std::to_string(pool_.size() + 1);
    item.ref = ref;
    item.feature = std::move(feature);
    pool_.push_back(std::move(item));
    return pool_.back().id;
}

ApiResponse Service::classify(std::span<const std::uint8_t> bytes, std::optional<double> tau) {
    const auto model = model_.load();
    if (!model) return error_response(503, "model not loaded");
    if (bytes.empty()) return error_response(400, "missing image");
    GrayImage image;
    try {
        image = limit_height(decode_gray(bytes), kMaxTestHeight);
    } catch (const Error& e) {
        return error_response(400, e.what());
    }
    ClassifyResult r;
    try {
        r = model->classify(image, tau.value_or(default_tau_));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Unavailable) return error_response(503, e.what());
        return error_response(400, e.what());
    }
    nlohmann::json body = classify_json(r);
    body["tau"] = tau.value_or(default_tau_);
    if (!r.feature.values.empty()) {
        std::string ref;
        {
            std::lock_guard lock(pool_mutex_);
            ref = "upload-" + std::to_string(next_upload_++);
        }
        body["queue_id"] = add_to_pool(ref, r.feature);
    }
    return {200, body};
}

ApiResponse Service::word(const std::string& token) const {
    const auto index = index_;
    if (!index) return error_response(503, "word index not loaded");
    return {200, query_json(*index, query_word(*index, token))};
}

nlohmann::json Service::list_json(const ShoppingList& list) const {
    const auto& classes = index_ ? index_->classes() : std::vector<std::string>{};
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : list.entries) {
        nlohmann::json j = {{"text", e.text}, {"state", entry_state_name(e.state)}};
        if (e.class_id >= 0) j["class"] = classes.at(static_cast<std::size_t>(e.class_id));
        if (e.state == EntryState::Pending) {
            nlohmann::json ranked = nlohmann::json::array();
            for (const auto& r : e.ranked)
                ranked.push_back({{"class", classes.at(static_cast<std::size_t>(r.class_id))},
                                  {"count", r.count},
                                  {"confidence", r.confidence}});
            j["ranked"] = ranked;
        }
        entries.push_back(j);
    }
    return {{"id", list.id}, {"entries", entries}, {"created", list.created}, {"updated", list.updated}};
}

ApiResponse Service::create_list(const nlohmann::json& body) {
    const auto index = index_;
    if (!index) return error_response(503, "word index not loaded");
    if (!body.is_object() || !body.contains("entries") || !body["entries"].is_array())
        return error_response(400, "expected {\"entries\": [text, ...]}");
    ShoppingList list;
    for (const auto& item : body["entries"]) {
        if (!item.is_string()) return error_response(400, "entries must be strings");
        ListEntry e;
        e.text = item.get<std::string>();
        const WordQuery q = query_word(*index, e.text);
        switch (q.kind) {
            case WordQuery::Kind::AutoMapped:
                e.state = EntryState::Auto;
                e.class_id = q.auto_class();
                break;
            case WordQuery::Kind::Ranked:
                e.state = EntryState::Pending;
                e.ranked = q.ranked;
                break;
            case WordQuery::Kind::Unknown: e.state = EntryState::Unknown; break;
        }
        list.entries.push_back(std::move(e));
    }
    list.created = list.updated = now_seconds();
    std::lock_guard lock(lists_mutex_);
    list.id = "L" + std::to_string(next_list_++);
    lists_[list.id] = list;
    return {201, list_json(list)};
}

ApiResponse Service::get_list(const std::string& id) const {
    std::lock_guard lock(lists_mutex_);
    const auto it = lists_.find(id);
    if (it == lists_.end()) return error_response(404, "no shopping list " + id);
    return {200, list_json(it->second)};
}

std::optional<int> Service::class_from_json(const nlohmann::json& v, const std::vector<std::string>& classes) const {
    if (v.is_number_integer()) {
        const auto i = v.get<long long>();
        if (i >= 0 && static_cast<std::size_t>(i) < classes.size()) return static_cast<int>(i);
        return std::nullopt;
    }
    if (v.is_string())
        for (std::size_t c = 0; c < classes.size(); ++c)
            if (classes[c] == v.get<std::string>()) return static_cast<int>(c);
    return std::nullopt;
}

ApiResponse Service::patch_entry(const std::string& id, const std::string& index, const nlohmann::json& body) {
    const auto words = index_;
    if (!words) return error_response(503, "word index not loaded");
    std::lock_guard lock(lists_mutex_);
    const auto it = lists_.find(id);
    if (it == lists_.end()) return error_response(404, "no shopping list " + id);
    const auto n = parse_index(index);
    if (!n || *n >= it->second.entries.size()) return error_response(404, "no entry " + index + " in list " + id);
    if (!body.is_object() || !body.contains("class")) return error_response(400, "expected {\"class\": name}");
    const auto cls = class_from_json(body["class"], words->classes());
    if (!cls) return error_response(400, "unknown class");
    ListEntry& e = it->second.entries[*n];
    e.state = EntryState::Chosen;
    e.class_id = *cls;
    e.ranked.clear();
    it->second.updated = now_seconds();
    return {200, list_json(it->second)};
}

ApiResponse Service::label_queue(const std::string& k_text) const {
    const auto model = model_.load();
    if (!model) return error_response(503, "model not loaded");
    std::size_t k = 5;
    if (!k_text.empty()) {
        const auto parsed = parse_index(k_text);
        if (!parsed || *parsed == 0) return error_response(400, "k must be a positive integer");
        k = *parsed;
    }
    std::vector<std::string> ids;
    std::vector<std::string> refs;
    std::vector<FeatureVector> features;
    {
        std::lock_guard lock(pool_mutex_);
        for (const auto& item : pool_)
            if (item.status == LabelStatus::Pending) {
                ids.push_back(item.id);
                refs.push_back(item.ref);
                features.push_back(item.feature);
            }
    }
    nlohmann::json items = nlohmann::json::array();
    if (!features.empty()) {
        if (!model->svm) return error_response(503, "the loaded variant has no SVM to rank by");
        for (const auto& q : select_uncertain(*model->svm, refs, features, std::min(k, features.size())))
            items.push_back({{"id", ids[q.pool_index]},
                             {"ref", q.ref},
                             {"predicted", model->classes.at(static_cast<std::size_t>(q.predicted))},
                             {"confidence", q.confidence},
                             {"status", "pending"}});
    }
    return {200, {{"items", items}, {"model_version", model->version}}};
}

ApiResponse Service::submit_label(const std::string& id, const nlohmann::json& body) {
    const auto model = model_.load();
    if (!model) return error_response(503, "model not loaded");
    std::lock_guard lock(pool_mutex_);
    auto it = std::find_if(pool_.begin(), pool_.end(), [&](const PoolItem& p) { return p.id == id; });
    if (it == pool_.end()) return error_response(404, "no queue item " + id);
    if (it->status != LabelStatus::Pending)
        return error_response(409, "queue item " + id + " is already " + status_name(it->status));
    if (!body.is_object()) return error_response(400, "expected a JSON object");
    if (body.value("skip", false)) {
        it->status = LabelStatus::Skipped;
        return {200, {{"id", id}, {"status", "skipped"}}};
    }
    if (!body.contains("label")) return error_response(400, "expected {\"label\": class} or {\"skip\": true}");
    const auto cls = class_from_json(body["label"], model->classes);
    if (!cls) return error_response(400, "unknown class");
    it->status = LabelStatus::Labeled;
    it->label = *cls;
    return {200, {{"id", id}, {"status", "labeled"}, {"label", model->classes[static_cast<std::size_t>(*cls)]}}};
}

ApiResponse Service::retrain() {
    std::unique_lock slot(retrain_mutex_, std::try_to_lock);
    if (!slot.owns_lock()) return error_response(409, "retrain already in progress");
    const auto current = model_.load();
    if (!current) return error_response(503, "model not loaded");
    if (!current->svm) return error_response(400, "the loaded variant has no SVM to retrain");
    if (base_features_.empty()) return error_response(503, "training encodings not loaded");
    std::vector<FeatureVector> features;
    std::vector<int> labels;
    {
        std::lock_guard lock(pool_mutex_);
        for (const auto& item : pool_)
            if (item.status == LabelStatus::Labeled) {
                features.push_back(item.feature);
                labels.push_back(item.label);
            }
    }
    if (retrain_hook) retrain_hook();
    SvmModel model;
    try {
        model = shelf::retrain(*current->svm, base_features_, base_labels_, features, labels);
    } catch (const Error& e) {
        return error_response(400, e.what());
    }
    auto next = std::make_shared<ModelState>(*current);
    next->svm = std::move(model);
    next->version = model_hash(*next->svm);
    if (!model_sink_.empty()) save_model(model_sink_, *next->svm);
    const std::string previous = current->version;
    model_.store(next);
    spdlog::info("retrained on {} labeled images: {} -> {}", labels.size(), previous, next->version);
    return {200, {{"version", next->version}, {"previous_version", previous}, {"labeled", labels.size()}}};
}

std::unique_ptr<Service> service_from_workspace(Workspace& workspace) {
    auto service = std::make_unique<Service>(workspace.config().tau);
    auto state = workspace.load_model_state();
    service->set_model(state);
    if (std::filesystem::exists(workspace.index_path())) service->set_index(WordClassIndex::load(workspace.index_path()));
    else spdlog::warn("no word index at {}; word queries will return 503", workspace.index_path().string());
    if (state->svm) {
        const auto& enc = workspace.encodings();
        const FeatureMode mode = variant_mode(state->variant);
        service->set_training_data(enc.train.features(mode), enc.train.labels);
        for (std::size_t i = 0; i < enc.test.size(); ++i) service->add_to_pool(enc.test.refs[i], enc.test.features(mode)[i]);
        service->set_model_sink(workspace.model_path(state->variant));
    }
    return service;
}

}  // namespace shelf
