#pragma once

#include "shelf/image.hpp"
#include "shelf/svm.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace shelf {

inline constexpr int kBowDescriptorLength = 128;
inline constexpr int kDefaultVocabularySize = 200;

/// 128-d gradient-histogram descriptors at scale-space blob keypoints (SIFT).
std::vector<std::vector<float>> local_descriptors(const GrayImage& image, int max_points = 200);

struct BowVocabulary {
    std::vector<std::vector<float>> words;
};

/// Word histogram normalised to sum 1; uniform when the image yields no descriptor.
std::vector<float> bow_histogram(std::span<const std::vector<float>> descriptors, const BowVocabulary& vocab);
FeatureVector bow_encode(const GrayImage& image, const BowVocabulary& vocab);

struct BowModel {
    BowVocabulary vocabulary;
    SvmModel svm;
};

struct BowParams {
    int vocabulary_size = kDefaultVocabularySize;
    std::size_t max_vocabulary_samples = 4000;
    int kmeans_iterations = 30;
    int max_points = 200;
    std::uint64_t seed = 0;
    SvmParams svm;
};

/// Bag-of-words baseline: descriptors from all training images, k-means
/// vocabulary, normalised histograms, one-vs-rest SVM. Throws when fewer
/// descriptors than vocabulary words are found.
BowModel bow_baseline_train(std::span<const GrayImage> images, std::span<const int> labels,
                            const std::vector<std::string>& classes, const BowParams& params);

Prediction bow_predict(const BowModel& model, const GrayImage& image);

void save_bow(const std::filesystem::path& path, const BowModel& model);
BowModel load_bow(const std::filesystem::path& path);

}  // namespace shelf
