#pragma once

#include "shelf/image.hpp"

#include <span>
#include <vector>

namespace shelf {

inline constexpr int kHogCellSize = 8;
inline constexpr int kHogBins = 9;
/// Each cell carries its 9-bin histogram normalised in each of the 4
/// overlapping 2x2 blocks that contain it.
inline constexpr int kHogCellLength = 4 * kHogBins;

/// Dense grid of block-normalised cell descriptors for one image at one scale.
struct HogGrid {
    int cells_x = 0;
    int cells_y = 0;
    int bins = kHogBins;
    int cell_size = kHogCellSize;
    int stride = kHogCellSize;
    double scale = 1.0;  // pyramid scale factor relative to the source image
    std::vector<float> data;  // (cells_y * cells_x) cells, kHogCellLength floats each
    std::vector<float> energy;  // per cell, mean gradient magnitude before normalisation

    static constexpr int cell_length() { return kHogCellLength; }

    std::span<const float> cell(int x, int y) const {
        return {data.data() + (static_cast<std::size_t>(y) * cells_x + x) * kHogCellLength,
                static_cast<std::size_t>(kHogCellLength)};
    }

    bool fits(int window_w, int window_h) const { return cells_x >= window_w && cells_y >= window_h; }

    /// Concatenated descriptors of a window, cells row-major.
    std::vector<float> window(int x, int y, int w, int h) const;

    /// Mean of `energy` over a window.
    double window_energy(int x, int y, int w, int h) const;
};

/// Unnormalised 9-bin orientation histograms per cell, before block
/// normalisation; exposed for tests and for the low-energy seed filter.
std::vector<float> cell_histograms(const GrayImage& image, int& cells_x, int& cells_y);

/// HOG with 8x8-pixel cells at stride 8, unsigned orientations over [0, 180)
/// with linear interpolation between the two nearest bin centres (0, 20, ... 160
/// degrees), and L2-hysteresis normalisation (clip 0.2) over 2x2-cell blocks.
/// Throws if the image is smaller than one cell.
HogGrid compute_hog(const GrayImage& image, double scale = 1.0);

}  // namespace shelf
