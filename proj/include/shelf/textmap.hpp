#pragma once

#include "shelf/dataset.hpp"
#include "shelf/image.hpp"
#include "shelf/synthetic.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shelf {

/// Per-pixel text likelihood; higher is more text-like.
struct TextScoreMap {
    int width = 0;
    int height = 0;
    std::vector<float> scores;

    float at(int x, int y) const { return scores[static_cast<std::size_t>(y) * width + x]; }
};

/// Text/no-text scorer plug-in.
class TextScorer {
public:
    virtual ~TextScorer() = default;
    virtual TextScoreMap score(const GrayImage& image) const = 0;
};

/// Default scorer: counts strong horizontal intensity transitions of the
/// z-scored image in a 9-pixel run and averages over 5 rows. Dense stroke
/// patterns score up to 100, isolated edges and flat areas score 0, so the
/// usual "> 10" cut separates printed text from graphics.
class GradientDensityScorer : public TextScorer {
public:
    TextScoreMap score(const GrayImage& image) const override;
};

struct SegmentParams {
    float threshold = 10.0f;  // keep pixels scoring strictly above
    int dilations = 6;        // 3x3 element
    int min_area = 230;       // components with area <= min_area are dropped
};

/// Bounding rectangles of the surviving connected components (8-connected),
/// ordered top-to-bottom then left-to-right.
std::vector<Rect> segment_text_regions(const TextScoreMap& map, const SegmentParams& params = {});

/// OCR plug-in: one string per region. Returning nullopt or throwing marks a
/// failed region.
class OcrAdapter {
public:
    virtual ~OcrAdapter() = default;
    virtual std::optional<std::string> recognize(const std::string& ref, const GrayImage& image, const Rect& region) = 0;
};

/// Recognises words by looking up the words.json sidecar written by the
/// synthetic generator: a region reads as every printed word it covers at
/// least half of, in reading order, separated by spaces.
class SyntheticOcr : public OcrAdapter {
public:
    explicit SyntheticOcr(WordSidecar sidecar) : sidecar_(std::move(sidecar)) {}
    static std::unique_ptr<SyntheticOcr> from_catalog(const Catalog& catalog);

    std::optional<std::string> recognize(const std::string& ref, const GrayImage& image, const Rect& region) override;

    /// Regions that should report failure, for exercising error paths.
    void fail_on(const Rect& region) { failing_.push_back(region); }

private:
    WordSidecar sidecar_;
    std::vector<Rect> failing_;
};

/// One string per region (possibly several words); failed regions yield "". Throws Error(Unavailable)
/// when no adapter is given.
std::vector<std::string> recognize_words(const std::string& ref, const GrayImage& image, std::span<const Rect> regions,
                                         OcrAdapter* ocr);

/// Lower-cases, trims non-alphanumeric edges, and rejects tokens shorter than
/// 3 characters or with at least as many digits as letters (weights, sizes).
std::optional<std::string> normalize_token(std::string_view raw);

/// Per-class histograms of packaging words.
class WordClassIndex {
public:
    WordClassIndex() = default;
    explicit WordClassIndex(std::vector<std::string> classes);

    const std::vector<std::string>& classes() const { return classes_; }
    std::size_t num_classes() const { return classes_.size(); }

    void add(std::size_t class_id, const std::string& token, int count = 1);
    int count(std::size_t class_id, const std::string& token) const;
    long total(std::size_t class_id) const { return totals_[class_id]; }
    const std::map<std::string, int>& histogram(std::size_t class_id) const { return histograms_[class_id]; }

    /// Adds every count of `other` (same class list) into this index.
    void merge(const WordClassIndex& other);

    nlohmann::json to_json() const;
    static WordClassIndex from_json(const nlohmann::json& j);
    void save(const std::filesystem::path& path) const;
    static WordClassIndex load(const std::filesystem::path& path);

    friend bool operator==(const WordClassIndex&, const WordClassIndex&) = default;

private:
    std::vector<std::string> classes_;
    std::vector<std::map<std::string, int>> histograms_;
    std::vector<long> totals_;
};

/// Score map, segmentation, OCR and normalisation for every training image,
/// counted under the image's class. Images whose OCR or decoding fails are
/// logged and skipped.
WordClassIndex build_word_index(const Catalog& catalog, OcrAdapter& ocr, const TextScorer& scorer,
                                unsigned workers = 1, const SegmentParams& params = {});

/// Tokens accepted from one image; region text is split on whitespace.
std::vector<std::string> image_tokens(const std::string& ref, const GrayImage& image, OcrAdapter& ocr,
                                      const TextScorer& scorer, const SegmentParams& params = {});

struct RankedClass {
    int class_id = 0;
    int count = 0;
    double confidence = 0.0;  // count / occurrences across all classes
};

struct WordQuery {
    enum class Kind { AutoMapped, Ranked, Unknown };
    Kind kind = Kind::Unknown;
    std::string token;
    std::vector<RankedClass> ranked;  // one entry when AutoMapped

    int auto_class() const { return ranked.front().class_id; }
};

/// AutoMapped when the token occurs in exactly one class, Ranked (descending
/// count, ties to the lower index) when several, Unknown otherwise.
WordQuery query_word(const WordClassIndex& index, std::string_view raw);

nlohmann::json query_json(const WordClassIndex& index, const WordQuery& q);

}  // namespace shelf
