#include "shelf/hog.hpp"

#include "shelf/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace shelf {

namespace {

constexpr float kNormEpsilon = 1e-4f;
constexpr float kClip = 0.2f;

void normalize_block(std::span<float> block) {
    auto l2 = [&] {
        double s = 0.0;
        for (float v : block) s += static_cast<double>(v) * v;
        return static_cast<float>(std::sqrt(s + kNormEpsilon * kNormEpsilon));
    };
    const float n1 = l2();
    for (float& v : block) v = std::min(v / n1, kClip);
    const float n2 = l2();
    for (float& v : block) v /= n2;
}

}  // namespace

std::vector<float> HogGrid::window(int x, int y, int w, int h) const {
    std::vector<float> out;
    out.reserve(static_cast<std::size_t>(w) * h * kHogCellLength);
    for (int dy = 0; dy < h; ++dy) {
        const float* row = data.data() + (static_cast<std::size_t>(y + dy) * cells_x + x) * kHogCellLength;
        out.insert(out.end(), row, row + static_cast<std::ptrdiff_t>(w) * kHogCellLength);
    }
    return out;
}

double HogGrid::window_energy(int x, int y, int w, int h) const {
    double s = 0.0;
    for (int dy = 0; dy < h; ++dy)
        for (int dx = 0; dx < w; ++dx) s += energy[static_cast<std::size_t>(y + dy) * cells_x + x + dx];
    return s / (static_cast<double>(w) * h);
}

std::vector<float> cell_histograms(const GrayImage& image, int& cells_x, int& cells_y) {
    if (image.width < kHogCellSize || image.height < kHogCellSize)
        throw Error(ErrorCode::InvalidArgument, "image smaller than one HOG cell");
    cells_x = (image.width - kHogCellSize) / kHogCellSize + 1;
    cells_y = (image.height - kHogCellSize) / kHogCellSize + 1;
    std::vector<float> hist(static_cast<std::size_t>(cells_x) * cells_y * kHogBins, 0.0f);

    constexpr double bin_width = 180.0 / kHogBins;
    const int w = image.width;
    const int h = image.height;
    for (int y = 0; y < cells_y * kHogCellSize; ++y) {
        const int ym = std::max(y - 1, 0);
        const int yp = std::min(y + 1, h - 1);
        for (int x = 0; x < cells_x * kHogCellSize; ++x) {
            const int xm = std::max(x - 1, 0);
            const int xp = std::min(x + 1, w - 1);
            const double gx = static_cast<double>(image.at(xp, y)) - image.at(xm, y);
            const double gy = static_cast<double>(image.at(x, yp)) - image.at(x, ym);
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0.0) continue;
            double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
            if (angle < 0.0) angle += 180.0;
            if (angle >= 180.0) angle -= 180.0;
            const double pos = angle / bin_width;
            const int lo = static_cast<int>(std::floor(pos)) % kHogBins;
            const int hi = (lo + 1) % kHogBins;
            const double frac = pos - std::floor(pos);
            // Bilinear vote into the four cells whose centres surround the pixel.
            const double fx = (x + 0.5) / kHogCellSize - 0.5;
            const double fy = (y + 0.5) / kHogCellSize - 0.5;
            const int x0 = static_cast<int>(std::floor(fx));
            const int y0 = static_cast<int>(std::floor(fy));
            const double wx1 = fx - x0;
            const double wy1 = fy - y0;
            for (int j = 0; j < 2; ++j) {
                const int cyi = y0 + j;
                if (cyi < 0 || cyi >= cells_y) continue;
                const double wy = j ? wy1 : 1.0 - wy1;
                for (int i = 0; i < 2; ++i) {
                    const int cxi = x0 + i;
                    if (cxi < 0 || cxi >= cells_x) continue;
                    const double wgt = mag * wy * (i ? wx1 : 1.0 - wx1);
                    float* cell = &hist[(static_cast<std::size_t>(cyi) * cells_x + cxi) * kHogBins];
                    cell[lo] += static_cast<float>(wgt * (1.0 - frac));
                    cell[hi] += static_cast<float>(wgt * frac);
                }
            }
        }
    }
    return hist;
}

HogGrid compute_hog(const GrayImage& image, double scale) {
    HogGrid grid;
    grid.scale = scale;
    const std::vector<float> hist = cell_histograms(image, grid.cells_x, grid.cells_y);
    const int cx = grid.cells_x;
    const int cy = grid.cells_y;
    // A block starts at each cell that has a right/lower neighbour; a 1-cell
    // wide grid degenerates to single-cell blocks.
    const int bx_count = std::max(cx - 1, 1);
    const int by_count = std::max(cy - 1, 1);
    const int bw = std::min(cx, 2);
    const int bh = std::min(cy, 2);

    // blocks[(by * bx_count + bx)] holds the normalised 2x2 x 9 vector.
    std::vector<float> blocks(static_cast<std::size_t>(bx_count) * by_count * 4 * kHogBins, 0.0f);
    for (int by = 0; by < by_count; ++by) {
        for (int bx = 0; bx < bx_count; ++bx) {
            std::span<float> block(&blocks[(static_cast<std::size_t>(by) * bx_count + bx) * 4 * kHogBins],
                                   4 * kHogBins);
            for (int j = 0; j < bh; ++j)
                for (int i = 0; i < bw; ++i) {
                    const float* src = &hist[(static_cast<std::size_t>(by + j) * cx + bx + i) * kHogBins];
                    std::copy(src, src + kHogBins, block.begin() + (j * 2 + i) * kHogBins);
                }
            normalize_block(block);
        }
    }

    grid.energy.assign(static_cast<std::size_t>(cx) * cy, 0.0f);
    for (std::size_t c = 0; c < grid.energy.size(); ++c) {
        float s = 0.0f;
        for (int b = 0; b < kHogBins; ++b) s += hist[c * kHogBins + b];
        grid.energy[c] = s / (kHogCellSize * kHogCellSize);
    }

    grid.data.assign(static_cast<std::size_t>(cx) * cy * kHogCellLength, 0.0f);
    for (int y = 0; y < cy; ++y) {
        for (int x = 0; x < cx; ++x) {
            float* out = &grid.data[(static_cast<std::size_t>(y) * cx + x) * kHogCellLength];
            int slot = 0;
            for (int oy = 0; oy < 2; ++oy) {
                for (int ox = 0; ox < 2; ++ox, ++slot) {
                    const int bx = std::clamp(x - 1 + ox, 0, bx_count - 1);
                    const int by = std::clamp(y - 1 + oy, 0, by_count - 1);
                    const int i = x - bx;
                    const int j = y - by;
                    const float* src =
                        &blocks[((static_cast<std::size_t>(by) * bx_count + bx) * 4 + j * 2 + i) * kHogBins];
                    std::copy(src, src + kHogBins, out + slot * kHogBins);
                }
            }
        }
    }
    return grid;
}

}  // namespace shelf
