#include "shelf/bow.hpp"

#include "shelf/binary_io.hpp"
#include "shelf/error.hpp"
#include "shelf/kmeans.hpp"
#include "shelf/random.hpp"

#include <opencv2/features2d.hpp>

#include <fstream>
#include <limits>

namespace shelf {

std::vector<std::vector<float>> local_descriptors(const GrayImage& image, int max_points) {
    cv::Mat m(image.height, image.width, CV_8U);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            m.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(std::clamp(image.at(x, y), 0.0f, 1.0f) * 255.0f + 0.5f);
    auto sift = cv::SIFT::create(max_points);
    std::vector<cv::KeyPoint> keypoints;
    cv::Mat desc;
    sift->detectAndCompute(m, cv::noArray(), keypoints, desc);
    std::vector<std::vector<float>> out;
    for (int r = 0; r < desc.rows; ++r) {
        const float* row = desc.ptr<float>(r);
        out.emplace_back(row, row + desc.cols);
    }
    return out;
}

std::vector<float> bow_histogram(std::span<const std::vector<float>> descriptors, const BowVocabulary& vocab) {
    const std::size_t v = vocab.words.size();
    std::vector<float> hist(v, 0.0f);
    if (descriptors.empty()) {
        std::fill(hist.begin(), hist.end(), 1.0f / static_cast<float>(v));
        return hist;
    }
    std::vector<double> counts(v, 0.0);
    for (const auto& d : descriptors) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t w = 0; w < v; ++w) {
            const double dist = squared_distance(d, vocab.words[w]);
            if (dist < best_d) {
                best_d = dist;
                best = w;
            }
        }
        counts[best] += 1.0;
    }
    for (std::size_t w = 0; w < v; ++w) hist[w] = static_cast<float>(counts[w] / static_cast<double>(descriptors.size()));
    return hist;
}

FeatureVector bow_encode(const GrayImage& image, const BowVocabulary& vocab) {
    return FeatureVector{FeatureMode::Whole, bow_histogram(local_descriptors(image), vocab)};
}

BowModel bow_baseline_train(std::span<const GrayImage> images, std::span<const int> labels,
                            const std::vector<std::string>& classes, const BowParams& params) {
    std::vector<std::vector<std::vector<float>>> per_image;
    std::vector<std::vector<float>> pool;
    for (const auto& img : images) {
        per_image.push_back(local_descriptors(img, params.max_points));
        pool.insert(pool.end(), per_image.back().begin(), per_image.back().end());
    }
    if (pool.size() < static_cast<std::size_t>(params.vocabulary_size))
        throw Error(ErrorCode::InvalidArgument, "only " + std::to_string(pool.size()) +
                                                    " local descriptors for a vocabulary of " +
                                                    std::to_string(params.vocabulary_size));
    if (pool.size() > params.max_vocabulary_samples) {
        Rng rng(params.seed, 0xb0);
        rng.shuffle(pool);
        pool.resize(params.max_vocabulary_samples);
    }
    BowModel model;
    auto km = kmeans(pool, params.vocabulary_size, params.seed, params.kmeans_iterations);
    model.vocabulary.words = std::move(km.centroids);
    // k-means may drop empty clusters; pad with pool samples so the vocabulary
    // keeps its nominal size.
    for (std::size_t i = 0; model.vocabulary.words.size() < static_cast<std::size_t>(params.vocabulary_size); ++i)
        model.vocabulary.words.push_back(pool[i % pool.size()]);
    std::vector<FeatureVector> features;
    for (const auto& d : per_image) features.push_back({FeatureMode::Whole, bow_histogram(d, model.vocabulary)});
    model.svm = train_ovr(features, labels, classes, params.svm);
    return model;
}

Prediction bow_predict(const BowModel& model, const GrayImage& image) {
    return predict(model.svm, bow_encode(image, model.vocabulary));
}

void save_bow(const std::filesystem::path& path, const BowModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write("SHBW", 4);
    binio::put_u32(out, 1);
    binio::put_u32(out, static_cast<std::uint32_t>(model.vocabulary.words.size()));
    binio::put_u32(out, kBowDescriptorLength);
    for (const auto& w : model.vocabulary.words) binio::put_floats(out, w);
    write_model(out, model.svm);
}

BowModel load_bow(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
    binio::expect_magic(in, "SHBW");
    if (binio::get_u32(in) != 1) throw Error(ErrorCode::Format, "unsupported vocabulary version");
    const auto count = binio::get_u32(in);
    const auto len = binio::get_u32(in);
    if (count > 1'000'000 || len != kBowDescriptorLength) throw Error(ErrorCode::Format, "bad vocabulary header");
    BowModel model;
    for (std::uint32_t i = 0; i < count; ++i) model.vocabulary.words.push_back(binio::get_floats(in, len));
    model.svm = read_model(in);
    return model;
}

}  // namespace shelf
