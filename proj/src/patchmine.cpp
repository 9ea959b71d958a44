#include "shelf/patchmine.hpp"

#include "shelf/error.hpp"
#include "shelf/linear_svm.hpp"
#include "shelf/kmeans.hpp"
#include "shelf/parallel.hpp"
#include "shelf/random.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <tuple>

namespace shelf {

namespace {

// Fixed-order dot product with independent partial sums; the compiler may
// vectorise the lanes but the summation order never changes.
inline float dot(const float* a, const float* b, std::size_t n) {
    float acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        for (int k = 0; k < 8; ++k) acc[k] += a[i + k] * b[i + k];
    for (; i < n; ++i) acc[0] += a[i] * b[i];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
}

struct PixelBox {
    double x0, y0, x1, y1;
};

PixelBox pixel_box(const HogGrid& g, int x, int y, int w, int h) {
    const double s = kHogCellSize / g.scale;
    return {x * s, y * s, (x + w) * s, (y + h) * s};
}

double iou(const PixelBox& a, const PixelBox& b) {
    const double iw = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    const double ih = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    if (iw <= 0 || ih <= 0) return 0.0;
    const double inter = iw * ih;
    const double uni = (a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter;
    return inter / uni;
}

using MemberKey = std::tuple<std::size_t, int, int, int>;  // image, level, x, y

struct Cluster {
    std::vector<std::vector<float>> members;
    std::set<MemberKey> keys;
};

std::vector<std::vector<float>> all_windows(std::span<const ImageGrids> images, int window, std::size_t cap,
                                            std::uint64_t seed) {
    std::vector<std::vector<float>> out;
    for (const auto& img : images)
        for (const auto& g : img.levels) {
            if (!g.fits(window, window)) continue;
            for (int y = 0; y + window <= g.cells_y; ++y)
                for (int x = 0; x + window <= g.cells_x; ++x) out.push_back(g.window(x, y, window, window));
        }
    if (out.size() > cap) {
        Rng rng(seed, 0x4e47);
        rng.shuffle(out);
        out.resize(cap);
    }
    return out;
}

template <typename T>
std::vector<T> subset(std::span<const T> items, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(items[i]);
    return out;
}

std::vector<Firing> top_firings(std::vector<Firing> firings, std::size_t limit) {
    std::stable_sort(firings.begin(), firings.end(), [](const Firing& a, const Firing& b) {
        if (a.score != b.score) return a.score > b.score;
        return std::tie(a.image, a.level, a.y, a.x) < std::tie(b.image, b.level, b.y, b.x);
    });
    if (firings.size() > limit) firings.resize(limit);
    return firings;
}

// Per-image best firing, tagged with whether the image belongs to the class.
void collect_hits(const std::vector<Firing>& firings, bool on_class, std::vector<ScoredHit>& hits, int& images_hit) {
    std::size_t last = static_cast<std::size_t>(-1);
    for (const auto& f : firings) {
        if (f.image == last) continue;  // firings are grouped by image, best first
        last = f.image;
        hits.push_back({f.score, on_class});
        if (on_class) ++images_hit;
    }
}

}  // namespace

ImageGrids compute_grids(const GrayImage& image, int levels, double factor) {
    ImageGrids out;
    const auto pyramid = build_pyramid(image, levels, factor, kHogCellSize);
    for (std::size_t i = 0; i < pyramid.size(); ++i)
        out.levels.push_back(compute_hog(pyramid[i], std::pow(factor, static_cast<double>(i))));
    return out;
}

float PatchDetector::score_at(const HogGrid& grid, int x, int y) const {
    const std::size_t row = static_cast<std::size_t>(window_w) * kHogCellLength;
    float s = bias;
    for (int dy = 0; dy < window_h; ++dy) {
        const float* g = grid.data.data() + (static_cast<std::size_t>(y + dy) * grid.cells_x + x) * kHogCellLength;
        s += dot(weights.data() + dy * row, g, row);
    }
    return s;
}

void PatchDetector::score_all(const HogGrid& grid, std::vector<float>& out) const {
    out.clear();
    if (!grid.fits(window_w, window_h)) return;
    const int nx = grid.cells_x - window_w + 1;
    const int ny = grid.cells_y - window_h + 1;
    out.resize(static_cast<std::size_t>(nx) * ny);
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) out[static_cast<std::size_t>(y) * nx + x] = score_at(grid, x, y);
}

std::size_t DetectorBank::size() const {
    std::size_t n = 0;
    for (const auto& c : classes) n += c.size();
    return n;
}

float DetectorBank::fire_threshold() const {
    for (const auto& c : classes)
        if (!c.empty()) return c.front().fire_threshold;
    return kDefaultFireThreshold;
}

std::vector<PatchCandidate> sample_seeds(std::span<const ImageGrids> images, int per_image, int window,
                                         std::uint64_t seed, double min_energy) {
    bool any_fits = false;
    std::vector<PatchCandidate> out;
    for (std::size_t i = 0; i < images.size(); ++i) {
        for (std::size_t l = 0; l < images[i].levels.size(); ++l) {
            const HogGrid& g = images[i].levels[l];
            if (!g.fits(window, window)) continue;
            any_fits = true;
            const int nx = g.cells_x - window + 1;
            const int ny = g.cells_y - window + 1;
            std::vector<int> positions(static_cast<std::size_t>(nx) * ny);
            std::iota(positions.begin(), positions.end(), 0);
            Rng rng(seed, i * 64 + l);
            rng.shuffle(positions);
            const std::size_t take = std::min<std::size_t>(positions.size(), static_cast<std::size_t>(per_image));
            std::sort(positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(take));
            for (std::size_t k = 0; k < take; ++k) {
                const int x = positions[k] % nx;
                const int y = positions[k] / nx;
                if (g.window_energy(x, y, window, window) < min_energy) continue;
                out.push_back({i, static_cast<int>(l), x, y, window, window, g.window(x, y, window, window)});
            }
        }
    }
    if (!any_fits) throw Error(ErrorCode::InvalidArgument, "no image is large enough for the patch window");
    return out;
}

std::vector<std::vector<std::size_t>> cluster_candidates(std::span<const PatchCandidate> candidates, int k,
                                                         std::uint64_t seed) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "cluster count must be >= 1");
    if (candidates.empty()) return {};
    std::vector<std::vector<float>> points;
    points.reserve(candidates.size());
    for (const auto& c : candidates) points.push_back(c.descriptor);
    const auto km = kmeans(points, std::min<int>(k, static_cast<int>(points.size())), seed);
    std::vector<std::vector<std::size_t>> clusters(km.centroids.size());
    for (std::size_t i = 0; i < km.assignment.size(); ++i) clusters[km.assignment[i]].push_back(i);
    std::erase_if(clusters, [](const auto& c) { return c.size() < 2; });
    return clusters;
}

PatchDetector train_detector(std::span<const std::vector<float>> positives,
                             std::span<const std::vector<float>> negatives, double regularization, std::uint64_t seed) {
    if (positives.empty()) throw Error(ErrorCode::InvalidArgument, "detector needs positives");
    const std::size_t len = positives[0].size();
    const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(len) / kHogCellLength)));
    if (static_cast<std::size_t>(side * side * kHogCellLength) != len)
        throw Error(ErrorCode::InvalidArgument, "descriptor is not a square window of HOG cells");
    LinearSvmOptions opt;
    opt.c = regularization;
    opt.seed = seed;
    const LinearSvm svm = train_linear_svm(positives, negatives, opt);
    PatchDetector d;
    d.weights = svm.weights;
    d.bias = svm.bias;
    d.window_w = side;
    d.window_h = side;
    return d;
}

std::vector<Firing> detect_firings(std::span<const ImageGrids> images, const PatchDetector& detector, int per_image,
                                   double overlap) {
    std::vector<Firing> out;
    std::vector<float> scores;
    for (std::size_t i = 0; i < images.size(); ++i) {
        std::vector<Firing> raw;
        for (std::size_t l = 0; l < images[i].levels.size(); ++l) {
            const HogGrid& g = images[i].levels[l];
            detector.score_all(g, scores);
            if (scores.empty()) continue;
            const int nx = g.cells_x - detector.window_w + 1;
            for (std::size_t k = 0; k < scores.size(); ++k)
                if (scores[k] > detector.fire_threshold)
                    raw.push_back({i, static_cast<int>(l), static_cast<int>(k % nx), static_cast<int>(k / nx), scores[k]});
        }
        raw = top_firings(std::move(raw), raw.size());
        std::vector<PixelBox> kept_boxes;
        int kept = 0;
        for (const auto& f : raw) {
            if (kept >= per_image) break;
            const PixelBox box =
                pixel_box(images[i].levels[f.level], f.x, f.y, detector.window_w, detector.window_h);
            const bool suppressed =
                std::any_of(kept_boxes.begin(), kept_boxes.end(), [&](const PixelBox& b) { return iou(b, box) > overlap; });
            if (suppressed) continue;
            kept_boxes.push_back(box);
            out.push_back(f);
            ++kept;
        }
    }
    return out;
}

double rank_score(std::span<const ScoredHit> hits, int top_r, double lambda) {
    std::vector<ScoredHit> sorted(hits.begin(), hits.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const ScoredHit& a, const ScoredHit& b) { return a.score > b.score; });
    if (sorted.size() > static_cast<std::size_t>(top_r)) sorted.resize(static_cast<std::size_t>(top_r));
    double on_sum = 0.0;
    int on = 0;
    for (const auto& h : sorted)
        if (h.on_class) {
            on_sum += h.score;
            ++on;
        }
    if (on == 0) return -std::numeric_limits<double>::infinity();
    const double purity = on_sum / on;
    const double discriminativeness = static_cast<double>(on) / static_cast<double>(sorted.size());
    return purity + lambda * discriminativeness;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> mining_halves(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed, 0x4a4c);
    rng.shuffle(idx);
    std::vector<std::size_t> a(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n / 2));
    std::vector<std::size_t> b(idx.begin() + static_cast<std::ptrdiff_t>(n / 2), idx.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return {a, b};
}

std::vector<RankedDetector> mine_class(int class_id, std::span<const ImageGrids> positives,
                                       std::span<const ImageGrids> negatives, const MiningParams& params) {
    if (positives.size() < 4)
        throw Error(ErrorCode::InvalidArgument,
                    "class " + std::to_string(class_id) + " needs >= 4 training images for mining");
    if (negatives.size() < 2) throw Error(ErrorCode::InvalidArgument, "mining needs >= 2 negative images");
    const std::uint64_t seed = Rng::mix(params.seed, static_cast<std::uint64_t>(class_id));
    const auto [pa, pb] = mining_halves(positives.size(), seed);
    const auto [na, nb] = mining_halves(negatives.size(), seed + 1);
    const std::vector<ImageGrids> pos_half[2] = {subset(positives, pa), subset(positives, pb)};
    const std::vector<ImageGrids> neg_half[2] = {subset(negatives, na), subset(negatives, nb)};
    const std::vector<std::vector<float>> neg_windows[2] = {
        all_windows(neg_half[0], params.window, params.max_negative_windows, seed + 2),
        all_windows(neg_half[1], params.window, params.max_negative_windows, seed + 3)};
    for (const auto& nw : neg_windows)
        if (nw.size() < 2) throw Error(ErrorCode::InvalidArgument, "negative images too small for the patch window");

    std::vector<PatchCandidate> candidates =
        sample_seeds(pos_half[0], params.seeds_per_image, params.window, seed + 4, params.min_seed_energy);
    if (candidates.size() > params.candidate_budget) {
        Rng rng(seed, 5);
        rng.shuffle(candidates);
        candidates.resize(params.candidate_budget);
    }
    std::vector<Cluster> clusters;
    if (candidates.size() >= 2) {
        const int k = std::max(4, static_cast<int>(candidates.size() / 4));
        for (const auto& members : cluster_candidates(candidates, std::min<int>(k, static_cast<int>(candidates.size())), seed + 6)) {
            Cluster c;
            for (std::size_t m : members) {
                c.members.push_back(candidates[m].descriptor);
                const auto& cand = candidates[m];
                c.keys.insert({cand.image, cand.level, cand.x, cand.y});
            }
            clusters.push_back(std::move(c));
        }
    }

    auto train = [&](const Cluster& c, int half, std::size_t salt) -> std::optional<PatchDetector> {
        try {
            PatchDetector d = train_detector(c.members, neg_windows[half], params.detector_c, seed + 100 + salt);
            d.class_id = class_id;
            d.fire_threshold = params.fire_threshold;
            return d;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Degenerate) throw;
            return std::nullopt;
        }
    };

    int cur = 0;
    for (int round = 0; round < params.rounds; ++round) {
        const int val = 1 - cur;
        std::vector<std::optional<Cluster>> next(clusters.size());
        parallel_for(clusters.size(), params.workers, [&](std::size_t i) {
            const auto det = train(clusters[i], cur, i);
            if (!det) return;
            const auto firings = top_firings(
                detect_firings(pos_half[val], *det, params.firings_per_image, params.nms_overlap),
                static_cast<std::size_t>(params.cluster_members));
            if (firings.size() < 2) return;
            Cluster c;
            for (const auto& f : firings) {
                c.members.push_back(pos_half[val][f.image].levels[f.level].window(f.x, f.y, det->window_w, det->window_h));
                c.keys.insert({f.image, f.level, f.x, f.y});
            }
            next[i] = std::move(c);
        });
        clusters.clear();
        std::set<std::set<MemberKey>> seen;
        for (auto& c : next)
            if (c && seen.insert(c->keys).second) clusters.push_back(std::move(*c));
        cur = val;
    }

    const int val = 1 - cur;
    std::vector<std::optional<RankedDetector>> ranked(clusters.size());
    parallel_for(clusters.size(), params.workers, [&](std::size_t i) {
        auto det = train(clusters[i], cur, 1000 + i);
        if (!det) return;
        std::vector<ScoredHit> hits;
        int images_hit = 0;
        int ignored = 0;
        collect_hits(detect_firings(pos_half[val], *det, 1, params.nms_overlap), true, hits, images_hit);
        collect_hits(detect_firings(neg_half[val], *det, 1, params.nms_overlap), false, hits, ignored);
        if (images_hit < params.min_validation_hits) return;
        const double score = rank_score(hits, params.rank_top, params.rank_lambda);
        if (!std::isfinite(score)) return;
        ranked[i] = RankedDetector{std::move(*det), score, images_hit};
    });
    std::vector<RankedDetector> out;
    for (auto& r : ranked)
        if (r) out.push_back(std::move(*r));
    std::stable_sort(out.begin(), out.end(), [](const RankedDetector& a, const RankedDetector& b) { return a.score > b.score; });
    return out;
}

std::vector<PatchDetector> select_top(std::span<const RankedDetector> ranked, std::size_t limit) {
    if (ranked.empty()) spdlog::warn("select_top: no ranked detectors for this class");
    std::vector<PatchDetector> out;
    for (std::size_t i = 0; i < std::min(limit, ranked.size()); ++i) out.push_back(ranked[i].detector);
    return out;
}

DetectorBank mine_bank(std::span<const std::vector<ImageGrids>> class_grids, const MiningParams& params) {
    const std::size_t num_classes = class_grids.size();
    DetectorBank bank;
    bank.classes.resize(num_classes);
    MiningParams inner = params;
    // Parallelise across classes; inner loops stay serial.
    inner.workers = 1;
    parallel_for(num_classes, params.workers, [&](std::size_t c) {
        std::vector<ImageGrids> negatives;
        for (std::size_t o = 0; o < num_classes; ++o) {
            if (o == c) continue;
            std::vector<std::size_t> idx(class_grids[o].size());
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            Rng rng(params.seed, 0x1000 + c * num_classes + o);
            rng.shuffle(idx);
            idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(params.negatives_per_class)));
            std::sort(idx.begin(), idx.end());
            for (std::size_t i : idx) negatives.push_back(class_grids[o][i]);
        }
        const auto ranked = mine_class(static_cast<int>(c), class_grids[c], negatives, inner);
        bank.classes[c] = select_top(ranked, params.top_k);
        spdlog::info("mined class {}: {} ranked, {} kept", c, ranked.size(), bank.classes[c].size());
    });
    return bank;
}

}  // namespace shelf
