#include "shelf/textmap.hpp"

#include "shelf/error.hpp"
#include "shelf/parallel.hpp"

#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace shelf {

namespace {

constexpr int kRunLength = 9;
constexpr int kRows = 5;
constexpr double kStrongStep = 0.5;  // in standard deviations

bool is_alnum_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

}  // namespace

TextScoreMap GradientDensityScorer::score(const GrayImage& image) const {
    TextScoreMap out{image.width, image.height, std::vector<float>(image.values.size(), 0.0f)};
    const NormalizedImage z = zscore_normalize(image);
    if (z.degenerate || image.width < 2) return out;
    const int w = image.width;
    const int h = image.height;
    std::vector<float> row_score(image.values.size(), 0.0f);
    std::vector<int> strong(static_cast<std::size_t>(w), 0);
    for (int y = 0; y < h; ++y) {
        const double* row = &z.values[static_cast<std::size_t>(y) * w];
        for (int x = 0; x + 1 < w; ++x) strong[x] = std::abs(row[x + 1] - row[x]) > kStrongStep ? 1 : 0;
        strong[w - 1] = 0;
        int run = 0;
        for (int x = 0; x < std::min(w, kRunLength / 2); ++x) run += strong[x];
        for (int x = 0; x < w; ++x) {
            const int enter = x + kRunLength / 2;
            const int leave = x - kRunLength / 2 - 1;
            if (enter < w) run += strong[enter];
            if (leave >= 0) run -= strong[leave];
            // Two transitions are what a single bar produces; text needs more.
            const double density = std::clamp((run - 2) / 4.0, 0.0, 1.0);
            row_score[static_cast<std::size_t>(y) * w + x] = static_cast<float>(100.0 * density);
        }
    }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int dy = -kRows / 2; dy <= kRows / 2; ++dy) {
                const int yy = y + dy;
                if (yy >= 0 && yy < h) s += row_score[static_cast<std::size_t>(yy) * w + x];
            }
            out.scores[static_cast<std::size_t>(y) * w + x] = static_cast<float>(s / kRows);
        }
    return out;
}

std::vector<Rect> segment_text_regions(const TextScoreMap& map, const SegmentParams& params) {
    if (map.width <= 0 || map.height <= 0) return {};
    cv::Mat mask(map.height, map.width, CV_8U);
    for (int y = 0; y < map.height; ++y)
        for (int x = 0; x < map.width; ++x) mask.at<std::uint8_t>(y, x) = map.at(x, y) > params.threshold ? 255 : 0;
    cv::Mat grown;
    cv::dilate(mask, grown, cv::Mat::ones(3, 3, CV_8U), cv::Point(-1, -1), params.dilations, cv::BORDER_CONSTANT,
               cv::morphologyDefaultBorderValue());
    cv::Mat labels, stats, centroids;
    const int n = cv::connectedComponentsWithStats(grown, labels, stats, centroids, 8, CV_32S);
    std::vector<Rect> out;
    for (int i = 1; i < n; ++i) {
        if (stats.at<int>(i, cv::CC_STAT_AREA) <= params.min_area) continue;
        out.push_back(Rect{stats.at<int>(i, cv::CC_STAT_LEFT), stats.at<int>(i, cv::CC_STAT_TOP),
                           stats.at<int>(i, cv::CC_STAT_WIDTH), stats.at<int>(i, cv::CC_STAT_HEIGHT)});
    }
    std::sort(out.begin(), out.end(), [](const Rect& a, const Rect& b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); });
    return out;
}

std::unique_ptr<SyntheticOcr> SyntheticOcr::from_catalog(const Catalog& catalog) {
    return std::make_unique<SyntheticOcr>(read_word_sidecar(catalog.root / kWordSidecarName));
}

std::optional<std::string> SyntheticOcr::recognize(const std::string& ref, const GrayImage&, const Rect& region) {
    if (std::find(failing_.begin(), failing_.end(), region) != failing_.end()) return std::nullopt;
    const auto it = sidecar_.find(ref);
    if (it == sidecar_.end()) return std::string();
    std::vector<std::pair<Rect, const std::string*>> covered;
    for (const auto& [word, rect] : it->second)
        if (2 * intersection_area(rect, region) >= rect.area()) covered.push_back({rect, &word});
    std::sort(covered.begin(), covered.end(), [](const auto& a, const auto& b) {
        return std::tie(a.first.y, a.first.x) < std::tie(b.first.y, b.first.x);
    });
    std::string text;
    for (const auto& [rect, word] : covered) {
        if (!text.empty()) text += ' ';
        text += *word;
    }
    return text;
}

std::vector<std::string> recognize_words(const std::string& ref, const GrayImage& image, std::span<const Rect> regions,
                                         OcrAdapter* ocr) {
    if (!ocr) throw Error(ErrorCode::Unavailable, "no OCR adapter configured");
    std::vector<std::string> out;
    out.reserve(regions.size());
    for (const auto& r : regions) {
        try {
            out.push_back(ocr->recognize(ref, image, r).value_or(std::string()));
        } catch (const std::exception& e) {
            spdlog::debug("OCR failed on {} region ({}, {}, {}, {}): {}", ref, r.x, r.y, r.w, r.h, e.what());
            out.emplace_back();
        }
    }
    return out;
}

std::optional<std::string> normalize_token(std::string_view raw) {
    std::size_t b = 0;
    std::size_t e = raw.size();
    while (b < e && !is_alnum_byte(static_cast<unsigned char>(raw[b]))) ++b;
    while (e > b && !is_alnum_byte(static_cast<unsigned char>(raw[e - 1]))) --e;
    std::string token(raw.substr(b, e - b));
    for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (token.size() < 3) return std::nullopt;
    std::size_t digits = 0;
    std::size_t letters = 0;
    for (unsigned char c : token) {
        if (std::isdigit(c)) ++digits;
        else if (std::isalpha(c) || c >= 0x80) ++letters;
    }
    if (digits >= letters) return std::nullopt;
    return token;
}

WordClassIndex::WordClassIndex(std::vector<std::string> classes)
    : classes_(std::move(classes)), histograms_(classes_.size()), totals_(classes_.size(), 0) {}

void WordClassIndex::add(std::size_t class_id, const std::string& token, int count) {
    if (class_id >= classes_.size()) throw Error(ErrorCode::InvalidArgument, "word index class out of range");
    if (count < 1) throw Error(ErrorCode::InvalidArgument, "word counts must be positive");
    histograms_[class_id][token] += count;
    totals_[class_id] += count;
}

int WordClassIndex::count(std::size_t class_id, const std::string& token) const {
    const auto& h = histograms_.at(class_id);
    const auto it = h.find(token);
    return it == h.end() ? 0 : it->second;
}

void WordClassIndex::merge(const WordClassIndex& other) {
    if (other.classes_ != classes_) throw Error(ErrorCode::InvalidArgument, "cannot merge indexes over different classes");
    for (std::size_t c = 0; c < classes_.size(); ++c)
        for (const auto& [token, n] : other.histograms_[c]) add(c, token, n);
}

nlohmann::json WordClassIndex::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t c = 0; c < classes_.size(); ++c) {
        nlohmann::json h = nlohmann::json::object();
        for (const auto& [token, n] : histograms_[c]) h[token] = n;
        j[classes_[c]] = h;
    }
    return j;
}

WordClassIndex WordClassIndex::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::Format, "word index must be a JSON object");
    std::vector<std::string> classes;
    for (const auto& [name, _] : j.items()) classes.push_back(name);
    std::sort(classes.begin(), classes.end());
    WordClassIndex index(classes);
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto& h = j.at(classes[c]);
        if (!h.is_object()) throw Error(ErrorCode::Format, "word histogram for '" + classes[c] + "' must be an object");
        for (const auto& [token, n] : h.items()) {
            if (!n.is_number_integer() || n.get<int>() < 1)
                throw Error(ErrorCode::Format, "count for '" + token + "' must be a positive integer");
            index.add(c, token, n.get<int>());
        }
    }
    return index;
}

void WordClassIndex::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << to_json().dump(2) << '\n';
}

WordClassIndex WordClassIndex::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Format, path.string() + ": " + e.what());
    }
}

std::vector<std::string> image_tokens(const std::string& ref, const GrayImage& image, OcrAdapter& ocr,
                                      const TextScorer& scorer, const SegmentParams& params) {
    const auto regions = segment_text_regions(scorer.score(image), params);
    std::vector<std::string> tokens;
    for (const auto& text : recognize_words(ref, image, regions, &ocr)) {
        std::istringstream words(text);
        std::string raw;
        while (words >> raw)
            if (auto t = normalize_token(raw)) tokens.push_back(std::move(*t));
    }
    return tokens;
}

WordClassIndex build_word_index(const Catalog& catalog, OcrAdapter& ocr, const TextScorer& scorer, unsigned workers,
                                const SegmentParams& params) {
    struct Job {
        std::size_t class_id;
        const std::string* ref;
    };
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < catalog.num_classes(); ++c)
        for (const auto& ref : catalog.train_images[c]) jobs.push_back({c, &ref});
    std::vector<std::vector<std::string>> tokens(jobs.size());
    parallel_for(jobs.size(), workers, [&](std::size_t i) {
        try {
            tokens[i] = image_tokens(*jobs[i].ref, catalog.load_train(*jobs[i].ref), ocr, scorer, params);
        } catch (const Error& e) {
            spdlog::warn("skipping {} while indexing words: {}", *jobs[i].ref, e.what());
        }
    });
    WordClassIndex index(catalog.classes);
    for (std::size_t i = 0; i < jobs.size(); ++i)
        for (const auto& t : tokens[i]) index.add(jobs[i].class_id, t);
    return index;
}

WordQuery query_word(const WordClassIndex& index, std::string_view raw) {
    WordQuery q;
    const auto token = normalize_token(raw);
    if (!token) return q;
    q.token = *token;
    long occurrences = 0;
    for (std::size_t c = 0; c < index.num_classes(); ++c) {
        const int n = index.count(c, *token);
        if (n == 0) continue;
        q.ranked.push_back({static_cast<int>(c), n, 0.0});
        occurrences += n;
    }
    if (q.ranked.empty()) return q;
    std::stable_sort(q.ranked.begin(), q.ranked.end(),
                     [](const RankedClass& a, const RankedClass& b) { return a.count > b.count; });
    for (auto& r : q.ranked) r.confidence = static_cast<double>(r.count) / static_cast<double>(occurrences);
    q.kind = q.ranked.size() == 1 ? WordQuery::Kind::AutoMapped : WordQuery::Kind::Ranked;
    return q;
}

nlohmann::json query_json(const WordClassIndex& index, const WordQuery& q) {
    switch (q.kind) {
        case WordQuery::Kind::AutoMapped:
            return {{"token", q.token}, {"auto", index.classes()[q.auto_class()]}};
        case WordQuery::Kind::Ranked: {
            nlohmann::json list = nlohmann::json::array();
            for (const auto& r : q.ranked)
                list.push_back({{"class", index.classes()[r.class_id]}, {"count", r.count}, {"confidence", r.confidence}});
            return {{"token", q.token}, {"ranked", list}};
        }
        case WordQuery::Kind::Unknown: break;
    }
    return {{"token", q.token}, {"unknown", true}};
}

}  // namespace shelf
