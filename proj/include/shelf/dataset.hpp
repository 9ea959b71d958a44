#pragma once

#include "shelf/image.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace shelf {

/// Test image with its single ground-truth class.
struct TestEntry {
    std::string ref;  // path relative to the catalog root
    int label = 0;

    friend bool operator==(const TestEntry&, const TestEntry&) = default;
};

/// Train/test catalog. On disk:
///   <root>/train/<class>/<image>   training images, one directory per class
///   <root>/test.csv                manifest: relative_path,class_name
/// Classes are ordered lexicographically so feature bins are stable.
struct Catalog {
    std::filesystem::path root;
    std::vector<std::string> classes;
    std::vector<std::vector<std::string>> train_images;  // per class, refs relative to root
    std::vector<TestEntry> test_images;

    std::size_t num_classes() const { return classes.size(); }
    int class_index(const std::string& name) const;  // -1 if absent
    std::filesystem::path path_of(const std::string& ref) const { return root / ref; }

    /// Training images are loaded as-is; test images are scaled to height <= 1080.
    GrayImage load_train(const std::string& ref) const;
    GrayImage load_test(const std::string& ref) const;

    /// Equality ignores the root so relocated copies compare equal.
    bool same_content(const Catalog& other) const;
};

inline constexpr int kMaxTestHeight = 1080;
inline constexpr const char* kManifestName = "test.csv";
inline constexpr const char* kTrainDir = "train";

/// Loads and validates a catalog. With `validate_images`, every referenced
/// image is decoded once. Throws Error naming the missing manifest, an
/// unknown class, or an undecodable file.
Catalog load_catalog(const std::filesystem::path& root, bool validate_images = true);

/// Copies a catalog's images and writes a fresh manifest under `root`.
void save_catalog(const Catalog& catalog, const std::filesystem::path& root);

struct SplitSpec {
    std::size_t learning_size = 0;
    std::size_t testing_size = 0;
    std::size_t step = 1;
    std::size_t runs = 1;
    std::uint64_t seed = 0;
};

/// Indices into Catalog::test_images.
struct LearningSplit {
    std::vector<std::size_t> learning;
    std::vector<std::size_t> testing;
};

void validate_split(const SplitSpec& spec, std::size_t available);

/// Two disjoint random subsets of the test pool; deterministic in (seed, run).
LearningSplit split_for_learning(std::size_t test_count, const SplitSpec& spec, std::size_t run);
LearningSplit split_for_learning(const Catalog& catalog, const SplitSpec& spec, std::size_t run);

}  // namespace shelf
