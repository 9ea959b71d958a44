#include "shelf/encoder.hpp"

#include "shelf/error.hpp"
#include "shelf/parallel.hpp"

#include <algorithm>
#include <array>
#include <iomanip>
#include <ostream>

namespace shelf {

namespace {

using RegionMax = std::array<float, kPyramidRegions>;

bool fits_any(const HogGrid& grid, const DetectorBank& bank) {
    for (const auto& cls : bank.classes)
        for (const auto& d : cls)
            if (grid.fits(d.window_w, d.window_h)) return true;
    return false;
}

std::vector<const PatchDetector*> flatten(const DetectorBank& bank) {
    std::vector<const PatchDetector*> out;
    for (const auto& cls : bank.classes)
        for (const auto& d : cls) out.push_back(&d);
    return out;
}

template <typename Visit>
void for_each_firing(const HogGrid& grid, const PatchDetector& d, std::vector<float>& scratch, Visit&& visit) {
    d.score_all(grid, scratch);
    if (scratch.empty()) return;
    const int nx = grid.cells_x - d.window_w + 1;
    for (std::size_t k = 0; k < scratch.size(); ++k) {
        if (!(scratch[k] > d.fire_threshold)) continue;
        const int x = static_cast<int>(k % nx);
        const int y = static_cast<int>(k / nx);
        visit(x, y, scratch[k]);
    }
}

std::pair<FeatureVector, FeatureVector> encode_grid(const HogGrid& grid, int width, int height,
                                                    const DetectorBank& bank, unsigned workers) {
    const auto detectors = flatten(bank);
    const std::size_t num_classes = bank.num_classes();
    const float floor = bank.fire_threshold();
    std::vector<RegionMax> per_detector(detectors.size());
    parallel_for(detectors.size(), workers, [&](std::size_t i) {
        RegionMax best;
        best.fill(floor);
        std::vector<float> scratch;
        const PatchDetector& d = *detectors[i];
        for_each_firing(grid, d, scratch, [&](int x, int y, float s) {
            const double cx = (x + d.window_w / 2.0) * kHogCellSize;
            const double cy = (y + d.window_h / 2.0) * kHogCellSize;
            best[0] = std::max(best[0], s);
            auto& q = best[static_cast<std::size_t>(quadrant_of(cx, cy, width, height))];
            q = std::max(q, s);
        });
        per_detector[i] = best;
    });
    FeatureVector whole{FeatureMode::Whole, std::vector<float>(num_classes, floor)};
    FeatureVector pyramid{FeatureMode::Pyramid, std::vector<float>(num_classes * kPyramidRegions, floor)};
    for (std::size_t i = 0; i < detectors.size(); ++i) {
        const auto c = static_cast<std::size_t>(detectors[i]->class_id);
        whole.values[c] = std::max(whole.values[c], per_detector[i][0]);
        for (std::size_t r = 0; r < kPyramidRegions; ++r) {
            float& v = pyramid.values[r * num_classes + c];
            v = std::max(v, per_detector[i][r]);
        }
    }
    return {std::move(whole), std::move(pyramid)};
}

}  // namespace

Region quadrant_of(double x, double y, int width, int height) {
    const bool right = x >= width / 2.0;
    const bool bottom = y >= height / 2.0;
    if (!bottom) return right ? Region::TopRight : Region::TopLeft;
    return right ? Region::BottomRight : Region::BottomLeft;
}

std::vector<Detection> detect_all(const HogGrid& grid, int width, int height, const DetectorBank& bank,
                                  unsigned workers) {
    (void)width;
    (void)height;
    const auto detectors = flatten(bank);
    std::vector<std::vector<Detection>> found(detectors.size());
    parallel_for(detectors.size(), workers, [&](std::size_t i) {
        std::vector<float> scratch;
        const PatchDetector& d = *detectors[i];
        for_each_firing(grid, d, scratch, [&](int x, int y, float s) {
            Detection det;
            det.detector = i;
            det.class_id = d.class_id;
            det.score = s;
            det.rect = Rect{x * kHogCellSize, y * kHogCellSize, d.window_w * kHogCellSize, d.window_h * kHogCellSize};
            det.center_x = det.rect.x + det.rect.w / 2.0;
            det.center_y = det.rect.y + det.rect.h / 2.0;
            found[i].push_back(det);
        });
    });
    std::vector<Detection> out;
    for (auto& f : found) out.insert(out.end(), f.begin(), f.end());
    return out;
}

std::vector<Detection> detect_all(const GrayImage& image, const DetectorBank& bank, unsigned workers, bool* too_small) {
    if (too_small) *too_small = false;
    if (bank.empty()) throw Error(ErrorCode::InvalidArgument, "detector bank is empty");
    if (image.width < kHogCellSize || image.height < kHogCellSize) {
        if (too_small) *too_small = true;
        return {};
    }
    const HogGrid grid = compute_hog(image);
    if (!fits_any(grid, bank)) {
        if (too_small) *too_small = true;
        return {};
    }
    return detect_all(grid, image.width, image.height, bank, workers);
}

FeatureVector pool_detections(std::span<const Detection> detections, std::size_t num_classes, FeatureMode mode,
                              int width, int height, float floor) {
    const std::size_t regions = mode == FeatureMode::Pyramid ? kPyramidRegions : 1;
    FeatureVector out{mode, std::vector<float>(num_classes * regions, floor)};
    for (const auto& d : detections) {
        const auto c = static_cast<std::size_t>(d.class_id);
        if (c >= num_classes) throw Error(ErrorCode::InvalidArgument, "detection class out of range");
        out.values[c] = std::max(out.values[c], d.score);
        if (mode == FeatureMode::Pyramid) {
            const auto r = static_cast<std::size_t>(quadrant_of(d.center_x, d.center_y, width, height));
            float& v = out.values[r * num_classes + c];
            v = std::max(v, d.score);
        }
    }
    return out;
}

std::pair<FeatureVector, FeatureVector> encode_both(const GrayImage& image, const DetectorBank& bank,
                                                    unsigned workers) {
    if (bank.empty()) throw Error(ErrorCode::InvalidArgument, "detector bank is empty");
    const float floor = bank.fire_threshold();
    if (image.width < kHogCellSize || image.height < kHogCellSize)
        return {FeatureVector{FeatureMode::Whole, std::vector<float>(bank.num_classes(), floor)},
                FeatureVector{FeatureMode::Pyramid, std::vector<float>(bank.num_classes() * kPyramidRegions, floor)}};
    return encode_grid(compute_hog(image), image.width, image.height, bank, workers);
}

FeatureVector encode(const GrayImage& image, const DetectorBank& bank, FeatureMode mode, unsigned workers) {
    auto both = encode_both(image, bank, workers);
    return mode == FeatureMode::Pyramid ? std::move(both.second) : std::move(both.first);
}

std::optional<int> highest_score_class(const FeatureVector& vector, float floor) {
    const std::size_t num_classes = vector.num_classes();
    const std::size_t regions = vector.mode == FeatureMode::Pyramid ? kPyramidRegions : 1;
    std::optional<int> best;
    float best_score = floor;
    for (std::size_t c = 0; c < num_classes; ++c) {
        float s = vector.values[c];
        for (std::size_t r = 1; r < regions; ++r) s = std::max(s, vector.values[r * num_classes + c]);
        if (s > best_score) {
            best_score = s;
            best = static_cast<int>(c);
        }
    }
    return best;
}

std::string mode_name(FeatureMode mode) { return mode == FeatureMode::Pyramid ? "pyramid" : "whole"; }

FeatureMode parse_mode(const std::string& name) {
    if (name == "pyramid") return FeatureMode::Pyramid;
    if (name == "whole") return FeatureMode::Whole;
    throw Error(ErrorCode::InvalidArgument, "unknown feature mode: " + name);
}

void write_feature_csv_row(std::ostream& out, const std::string& ref, const FeatureVector& vector) {
    out << ref << ',' << mode_name(vector.mode);
    out << std::setprecision(9);
    for (float v : vector.values) out << ',' << v;
    out << '\n';
}

}  // namespace shelf
