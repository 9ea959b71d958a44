#pragma once

#include "shelf/pipeline.hpp"
#include "shelf/synthetic.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace fixture {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("shelf-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

/// Mining settings small enough for unit tests (a few seconds per catalog).
inline shelf::MiningParams quick_mining(std::uint64_t seed = 0) {
    shelf::MiningParams p;
    p.pyramid_levels = 3;
    p.rounds = 2;
    p.seeds_per_image = 8;
    p.candidate_budget = 400;
    p.negatives_per_class = 3;
    p.max_negative_windows = 800;
    p.top_k = 12;
    p.seed = seed;
    return p;
}

inline shelf::SyntheticParams small_catalog(std::uint64_t seed = 3) {
    shelf::SyntheticParams s;
    s.num_classes = 3;
    s.per_class = 8;
    s.shelf_images = 9;
    s.max_products = 8;
    s.seed = seed;
    return s;
}

/// One small catalog and bank shared by every test in the binary.
struct Shared {
    TempDir dir{"shared"};
    shelf::Catalog catalog;
    shelf::DetectorBank bank;

    Shared() {
        catalog = shelf::generate_synthetic(small_catalog(), dir.path() / "catalog");
        bank = shelf::mine_catalog(catalog, quick_mining());
    }

    static Shared& get() {
        static Shared s;
        return s;
    }
};

}  // namespace fixture
