#pragma once

#include "shelf/textmap.hpp"
#include "shelf/workspace.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shelf {

struct ApiResponse {
    int status = 200;
    nlohmann::json body;
};

enum class EntryState { Auto, Chosen, Pending, Unknown };

struct ListEntry {
    std::string text;
    EntryState state = EntryState::Unknown;
    int class_id = -1;               // Auto and Chosen
    std::vector<RankedClass> ranked;  // Pending
};

struct ShoppingList {
    std::string id;
    std::vector<ListEntry> entries;
    std::int64_t created = 0;  // unix seconds
    std::int64_t updated = 0;
};

std::string entry_state_name(EntryState s);

struct PoolItem {
    std::string id;
    std::string ref;
    FeatureVector feature;
    LabelStatus status = LabelStatus::Pending;
    int label = -1;
};

/// Holder of the current model; readers take a snapshot, writers swap the
/// pointer, so no reader observes a partially built model.
class ModelSlot {
public:
    std::shared_ptr<const ModelState> load() const {
        std::lock_guard lock(mutex_);
        return model_;
    }
    void store(std::shared_ptr<const ModelState> model) {
        std::lock_guard lock(mutex_);
        model_ = std::move(model);
    }

private:
    mutable std::mutex mutex_;
    std::shared_ptr<const ModelState> model_;
};

/// Transport-independent request handlers behind the HTTP API.
/// Reads run concurrently; retrain holds an exclusive slot and publishes the
/// new model with one atomic swap.
class Service {
public:
    explicit Service(double default_tau = 0.0);

    void set_model(std::shared_ptr<const ModelState> model);
    std::shared_ptr<const ModelState> model() const { return model_.load(); }
    void set_index(WordClassIndex index);
    /// Training encodings that every retrain starts from (mode must match the model).
    void set_training_data(std::vector<FeatureVector> features, std::vector<int> labels);
    /// Adds an image encoding to the labeling pool; returns its id.
    std::string add_to_pool(const std::string& ref, FeatureVector feature);
    /// Where retrained models are written; empty keeps them in memory only.
    void set_model_sink(std::filesystem::path path) { model_sink_ = std::move(path); }

    ApiResponse classify(std::span<const std::uint8_t> image_bytes, std::optional<double> tau);
    ApiResponse word(const std::string& token) const;
    ApiResponse create_list(const nlohmann::json& body);
    ApiResponse get_list(const std::string& id) const;
    ApiResponse patch_entry(const std::string& id, const std::string& index, const nlohmann::json& body);
    ApiResponse label_queue(const std::string& k) const;
    ApiResponse submit_label(const std::string& id, const nlohmann::json& body);
    ApiResponse retrain();

    /// Called while the retrain slot is held; lets tests observe concurrency.
    std::function<void()> retrain_hook;

private:
    nlohmann::json list_json(const ShoppingList& list) const;
    std::optional<int> class_from_json(const nlohmann::json& v, const std::vector<std::string>& classes) const;

    double default_tau_;
    ModelSlot model_;
    std::shared_ptr<const WordClassIndex> index_;
    std::vector<FeatureVector> base_features_;
    std::vector<int> base_labels_;
    std::filesystem::path model_sink_;

    mutable std::mutex lists_mutex_;
    std::map<std::string, ShoppingList> lists_;
    std::uint64_t next_list_ = 1;

    mutable std::mutex pool_mutex_;
    std::vector<PoolItem> pool_;
    std::uint64_t next_upload_ = 1;

    std::mutex retrain_mutex_;
};

/// HTTP binding of a Service.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds (port 0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    /// Serves until stop(); blocks.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// A Service populated from a workspace: model, word index, training
/// encodings and the test images as the initial labeling pool.
std::unique_ptr<Service> service_from_workspace(Workspace& workspace);

}  // namespace shelf
