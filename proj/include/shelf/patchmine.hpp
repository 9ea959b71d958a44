#pragma once

#include "shelf/hog.hpp"
#include "shelf/image.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace shelf {

inline constexpr float kDefaultFireThreshold = -1.5f;
inline constexpr std::size_t kDefaultTopDetectors = 210;

/// HOG grids of one image at every mining scale (level 0 first).
struct ImageGrids {
    std::vector<HogGrid> levels;
};

ImageGrids compute_grids(const GrayImage& image, int levels, double factor);

/// A window of HOG cells taken from one image of the mining set.
struct PatchCandidate {
    std::size_t image = 0;  // index into the grids the candidate was sampled from
    int level = 0;
    int x = 0, y = 0, w = 0, h = 0;  // in cells at that level
    std::vector<float> descriptor;
};

/// Linear template over a window of HOG cells.
struct PatchDetector {
    std::vector<float> weights;  // w * h * kHogCellLength, cells row-major
    float bias = 0.0f;
    int class_id = 0;
    int window_w = 6;
    int window_h = 6;
    float fire_threshold = kDefaultFireThreshold;

    /// Score of the window whose top-left cell is (x, y).
    float score_at(const HogGrid& grid, int x, int y) const;

    /// Scores of all valid windows, row-major over (cells_y - h + 1) x (cells_x - w + 1).
    void score_all(const HogGrid& grid, std::vector<float>& out) const;

    friend bool operator==(const PatchDetector&, const PatchDetector&) = default;
};

/// Per class, detectors ordered by rank (best first).
struct DetectorBank {
    std::vector<std::vector<PatchDetector>> classes;

    std::size_t num_classes() const { return classes.size(); }
    std::size_t size() const;
    bool empty() const { return size() == 0; }
    float fire_threshold() const;

    friend bool operator==(const DetectorBank&, const DetectorBank&) = default;
};

struct MiningParams {
    int window = 6;  // cells, square
    int pyramid_levels = 7;
    double pyramid_factor = 0.70710678118654752;  // 2^(-1/2)
    int seeds_per_image = 25;
    std::size_t candidate_budget = 4000;  // per class; seeds beyond this are subsampled
    double min_seed_energy = 0.02;        // mean gradient magnitude per pixel
    int rounds = 4;
    int negatives_per_class = 5;
    std::size_t max_negative_windows = 4000;
    double detector_c = 0.1;
    int cluster_members = 5;     // top firings that re-form a cluster each round
    int firings_per_image = 5;   // per detector, after non-maximum suppression
    double nms_overlap = 0.3;
    int rank_top = 10;
    double rank_lambda = 1.0;
    int min_validation_hits = 3;
    std::size_t top_k = kDefaultTopDetectors;
    float fire_threshold = kDefaultFireThreshold;
    std::uint64_t seed = 0;
    unsigned workers = 1;
};

/// Random windows per image per scale, skipping windows whose mean gradient
/// energy is below `min_energy`. Throws if no grid can hold a window.
std::vector<PatchCandidate> sample_seeds(std::span<const ImageGrids> images, int per_image, int window,
                                         std::uint64_t seed, double min_energy = 0.02);

/// k-means over candidate descriptors; clusters with fewer than two members
/// are dropped. Returns member index lists.
std::vector<std::vector<std::size_t>> cluster_candidates(std::span<const PatchCandidate> candidates, int k,
                                                         std::uint64_t seed);

/// Linear max-margin detector separating cluster members from negative windows.
/// Throws Error(Degenerate) when the two sets cannot be told apart.
PatchDetector train_detector(std::span<const std::vector<float>> positives,
                             std::span<const std::vector<float>> negatives, double regularization,
                             std::uint64_t seed = 0);

/// One detection of a detector in a mining image.
struct Firing {
    std::size_t image = 0;
    int level = 0;
    int x = 0, y = 0;  // cells at that level
    float score = 0.0f;
};

/// Firings above the detector's threshold, greedy NMS (IoU of the windows in
/// source-image pixels above `overlap` suppresses), at most `per_image` per
/// image. Sorted by image, then score descending.
std::vector<Firing> detect_firings(std::span<const ImageGrids> images, const PatchDetector& detector,
                                   int per_image, double overlap);

/// A firing reduced to what ranking needs.
struct ScoredHit {
    float score = 0.0f;
    bool on_class = false;
};

/// purity + lambda * discriminativeness over the top-r hits: purity is the mean
/// score of on-class hits among them, discriminativeness the fraction of them
/// that are on-class. -inf when no on-class hit reaches the top r.
double rank_score(std::span<const ScoredHit> hits, int top_r = 10, double lambda = 1.0);

struct RankedDetector {
    PatchDetector detector;
    double score = -std::numeric_limits<double>::infinity();
    int validation_hits = 0;  // distinct validation class images fired on
};

/// Ranked detectors for one class; `positives` are the class's training
/// images, `negatives` the sampled images of other classes. Requires >= 4
/// positive images.
std::vector<RankedDetector> mine_class(int class_id, std::span<const ImageGrids> positives,
                                       std::span<const ImageGrids> negatives, const MiningParams& params);

/// First min(limit, |ranked|) detectors; logs a warning for an empty list.
std::vector<PatchDetector> select_top(std::span<const RankedDetector> ranked, std::size_t limit);

/// Disjoint halves of [0, n) as used for cross-validated mining.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> mining_halves(std::size_t n, std::uint64_t seed);

/// Mines every class (in parallel across `params.workers`). Negatives for each
/// class are `negatives_per_class` seeded picks from each other class.
DetectorBank mine_bank(std::span<const std::vector<ImageGrids>> class_grids, const MiningParams& params);

}  // namespace shelf
