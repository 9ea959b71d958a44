#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace shelf {

/// 8-bit interleaved RGB image as decoded from disk.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel
};

/// Single-channel image with row-major intensities in [0, 1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.0f);

    float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    bool empty() const { return values.empty(); }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Real-valued grid produced by z-score normalisation.
struct NormalizedImage {
    int width = 0;
    int height = 0;
    std::vector<double> values;
    bool degenerate = false;  // input had zero variance; values are all zero
};

GrayImage to_grayscale(const RgbImage& image);

NormalizedImage zscore_normalize(const GrayImage& image);

/// Resamples with area averaging when shrinking and bilinear interpolation when growing.
GrayImage resize(const GrayImage& image, int width, int height);

/// Level 0 is the input; level i is scaled by factor^i. Levels with a side
/// shorter than `min_side` are dropped, so fewer than `levels` may come back.
std::vector<GrayImage> build_pyramid(const GrayImage& image, int levels, double factor,
                                     int min_side = 8);

/// Downscales so height <= max_height, preserving aspect. Smaller images are returned as-is.
GrayImage limit_height(const GrayImage& image, int max_height);

GrayImage box_blur(const GrayImage& image, int radius);

RgbImage read_rgb(const std::filesystem::path& path);
GrayImage read_gray(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const GrayImage& image);
void write_png(const std::filesystem::path& path, const RgbImage& image);

/// Decodes an in-memory PNG/JPEG buffer (used for HTTP uploads).
GrayImage decode_gray(std::span<const std::uint8_t> bytes);

}  // namespace shelf
