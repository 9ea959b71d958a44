#pragma once

// Straightforward reference implementations used to check the optimised code.
// They deliberately avoid the library's helpers (and OpenCV) so a shared bug
// cannot hide on both sides of a comparison.

#include "shelf/encoder.hpp"
#include "shelf/synthetic.hpp"
#include "shelf/textmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

namespace oracle {

/// Per-class accuracy averaged over classes that have test images.
inline double mean_class_accuracy(const std::vector<int>& pred, const std::vector<int>& truth, int classes) {
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < classes; ++c) {
        long n = 0, k = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (truth[i] != c) continue;
            ++n;
            if (pred[i] == c) ++k;
        }
        if (n == 0) continue;
        sum += static_cast<double>(k) / static_cast<double>(n);
        ++present;
    }
    return sum / present;
}

/// Two-step max pooling recomputed region by region from raw detections.
inline std::vector<float> pooled(const std::vector<shelf::Detection>& dets, std::size_t classes, bool pyramid, int width,
                                 int height, float floor) {
    const std::size_t regions = pyramid ? 5 : 1;
    std::vector<float> out(classes * regions, floor);
    for (std::size_t r = 0; r < regions; ++r) {
        for (std::size_t c = 0; c < classes; ++c) {
            // First step: best score of each detector inside the region.
            std::vector<std::pair<std::size_t, float>> per_detector;
            for (const auto& d : dets) {
                if (static_cast<std::size_t>(d.class_id) != c) continue;
                if (r > 0) {
                    const bool right = d.center_x >= width / 2.0;
                    const bool bottom = d.center_y >= height / 2.0;
                    const std::size_t q = 1 + (bottom ? 2 : 0) + (right ? 1 : 0);
                    if (q != r) continue;
                }
                auto it = std::find_if(per_detector.begin(), per_detector.end(),
                                       [&](const auto& p) { return p.first == d.detector; });
                if (it == per_detector.end())
                    per_detector.push_back({d.detector, d.score});
                else
                    it->second = std::max(it->second, d.score);
            }
            // Second step: best detector.
            for (const auto& [id, s] : per_detector) out[r * classes + c] = std::max(out[r * classes + c], s);
        }
    }
    return out;
}

/// Binary mask -> repeated 3x3 dilation -> 8-connected flood fill, keeping
/// components whose pixel count exceeds min_area. Returns bounding boxes
/// ordered by (top, left).
inline std::vector<shelf::Rect> segment(const shelf::TextScoreMap& map, float threshold, int dilations, int min_area) {
    const int w = map.width, h = map.height;
    std::vector<char> mask(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) mask[static_cast<std::size_t>(y) * w + x] = map.at(x, y) > threshold;
    for (int it = 0; it < dilations; ++it) {
        std::vector<char> next(mask.size(), 0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                char v = 0;
                for (int dy = -1; dy <= 1 && !v; ++dy)
                    for (int dx = -1; dx <= 1 && !v; ++dx) {
                        const int xx = x + dx, yy = y + dy;
                        if (xx >= 0 && yy >= 0 && xx < w && yy < h && mask[static_cast<std::size_t>(yy) * w + xx]) v = 1;
                    }
                next[static_cast<std::size_t>(y) * w + x] = v;
            }
        mask.swap(next);
    }
    std::vector<char> seen(mask.size(), 0);
    std::vector<shelf::Rect> out;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t start = static_cast<std::size_t>(y) * w + x;
            if (!mask[start] || seen[start]) continue;
            std::vector<std::pair<int, int>> stack{{x, y}};
            seen[start] = 1;
            int area = 0, x0 = x, y0 = y, x1 = x, y1 = y;
            while (!stack.empty()) {
                const auto [cx, cy] = stack.back();
                stack.pop_back();
                ++area;
                x0 = std::min(x0, cx), y0 = std::min(y0, cy), x1 = std::max(x1, cx), y1 = std::max(y1, cy);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xx = cx + dx, yy = cy + dy;
                        if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
                        const std::size_t k = static_cast<std::size_t>(yy) * w + xx;
                        if (mask[k] && !seen[k]) {
                            seen[k] = 1;
                            stack.push_back({xx, yy});
                        }
                    }
            }
            if (area > min_area) out.push_back({x0, y0, x1 - x0 + 1, y1 - y0 + 1});
        }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.y != b.y ? a.y < b.y : a.x < b.x; });
    return out;
}

/// Unnormalised cell histograms: every pixel votes into one orientation
/// bin pair and the four surrounding cells, written as a plain loop over
/// cells and the pixels that can reach them.
inline std::vector<double> cell_histograms(const shelf::GrayImage& img, int& cx, int& cy) {
    cx = (img.width - 8) / 8 + 1;
    cy = (img.height - 8) / 8 + 1;
    std::vector<double> hist(static_cast<std::size_t>(cx) * cy * 9, 0.0);
    auto px = [&](int x, int y) {
        x = std::clamp(x, 0, img.width - 1);
        y = std::clamp(y, 0, img.height - 1);
        return static_cast<double>(img.at(x, y));
    };
    for (int j = 0; j < cy; ++j)
        for (int i = 0; i < cx; ++i) {
            const double centre_x = i * 8 + 4.0, centre_y = j * 8 + 4.0;
            for (int y = 0; y < cy * 8; ++y)
                for (int x = 0; x < cx * 8; ++x) {
                    const double dx = std::abs(x + 0.5 - centre_x) / 8.0;
                    const double dy = std::abs(y + 0.5 - centre_y) / 8.0;
                    if (dx >= 1.0 || dy >= 1.0) continue;
                    const double gx = px(x + 1, y) - px(x - 1, y);
                    const double gy = px(x, y + 1) - px(x, y - 1);
                    const double mag = std::hypot(gx, gy);
                    if (mag == 0.0) continue;
                    double deg = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
                    while (deg < 0.0) deg += 180.0;
                    while (deg >= 180.0) deg -= 180.0;
                    const double pos = deg / 20.0;
                    const int lo = static_cast<int>(pos) % 9;
                    const double frac = pos - std::floor(pos);
                    const double wgt = mag * (1.0 - dx) * (1.0 - dy);
                    double* cell = &hist[(static_cast<std::size_t>(j) * cx + i) * 9];
                    cell[lo] += wgt * (1.0 - frac);
                    cell[(lo + 1) % 9] += wgt * frac;
                }
        }
    return hist;
}

}  // namespace oracle
