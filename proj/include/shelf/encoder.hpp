#pragma once

#include "shelf/hog.hpp"
#include "shelf/image.hpp"
#include "shelf/patchmine.hpp"
#include "shelf/synthetic.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shelf {

/// A window that scored above its detector's fire threshold.
struct Detection {
    std::size_t detector = 0;  // index into the bank flattened class-major
    int class_id = 0;
    float score = 0.0f;
    Rect rect;  // pixels at scale 0
    double center_x = 0.0;
    double center_y = 0.0;
};

enum class FeatureMode { Whole, Pyramid };

/// Region order for pyramid vectors: whole image, then the four quadrants.
enum class Region { Whole = 0, TopLeft = 1, TopRight = 2, BottomLeft = 3, BottomRight = 4 };
inline constexpr int kPyramidRegions = 5;

/// Per-class two-step max-pooled detector scores; length L or 5L.
struct FeatureVector {
    FeatureMode mode = FeatureMode::Whole;
    std::vector<float> values;

    std::size_t num_classes() const {
        return mode == FeatureMode::Pyramid ? values.size() / kPyramidRegions : values.size();
    }
    float bin(std::size_t class_id, Region region = Region::Whole) const {
        return values[static_cast<std::size_t>(region) * num_classes() + class_id];
    }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Quadrant containing a point; points on the mid lines go right/bottom.
Region quadrant_of(double x, double y, int width, int height);

/// All windows of every detector at scale 0 scoring above the fire threshold.
/// Returns an empty list and sets `too_small` when the image cannot hold a
/// detector window. Evaluation is parallel over detectors; output order is
/// by detector, then window position, regardless of worker count.
std::vector<Detection> detect_all(const GrayImage& image, const DetectorBank& bank, unsigned workers = 1,
                                  bool* too_small = nullptr);
std::vector<Detection> detect_all(const HogGrid& grid, int width, int height, const DetectorBank& bank,
                                  unsigned workers = 1);

/// Two-step max pooling of a detection list. Bins with no detection hold `floor`.
FeatureVector pool_detections(std::span<const Detection> detections, std::size_t num_classes, FeatureMode mode,
                              int width, int height, float floor);

/// Equivalent to pool_detections(detect_all(...)) without materialising the
/// detection list.
FeatureVector encode(const GrayImage& image, const DetectorBank& bank, FeatureMode mode, unsigned workers = 1);

/// Both encodings from one detector pass (whole-image vector first).
std::pair<FeatureVector, FeatureVector> encode_both(const GrayImage& image, const DetectorBank& bank,
                                                    unsigned workers = 1);

/// Class of the highest pooled score (pyramid: max over a class's 5 regions);
/// ties go to the lower index. nullopt when every bin sits at the floor.
std::optional<int> highest_score_class(const FeatureVector& vector, float floor);

std::string mode_name(FeatureMode mode);
FeatureMode parse_mode(const std::string& name);

void write_feature_csv_row(std::ostream& out, const std::string& ref, const FeatureVector& vector);

}  // namespace shelf
