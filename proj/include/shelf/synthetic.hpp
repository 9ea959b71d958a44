#pragma once

#include "shelf/dataset.hpp"
#include "shelf/image.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace shelf {

/// Pixel rectangle.
struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    int area() const { return w * h; }
    friend bool operator==(const Rect&, const Rect&) = default;
};

int intersection_area(const Rect& a, const Rect& b);

/// A word printed on the first `per_class[c]` training images of class c.
struct WordPlan {
    std::string word;
    std::vector<int> per_class;
};

struct SyntheticParams {
    int num_classes = 4;
    int per_class = 20;
    int shelf_images = 40;
    std::uint64_t seed = 0;

    int product_width = 80;
    int product_height = 96;
    int studio_margin = 8;      // backdrop border around training products
    double studio_noise = 0.015;  // sensor noise sigma on training images
    bool brand_marks = true;      // per-product marks drawn from a pool shared by all classes
    int min_products = 6;
    int max_products = 30;
    /// Pairs of classes that print the same logo next to their own motif.
    std::vector<std::pair<int, int>> shared_logos;
    /// 0 keeps shelf photos close to the studio images; 1 adds heavy blur,
    /// contrast loss, and per-product motif distortion.
    double domain_shift = 0.0;
    /// Replaces the default words (class name on every image plus a few
    /// shared words) when non-empty.
    std::vector<WordPlan> words;
    std::vector<std::string> class_names;  // defaults to grocery names
};

/// Word locations on a training image, keyed by catalog ref in words.json.
using WordSidecar = std::map<std::string, std::vector<std::pair<std::string, Rect>>>;

inline constexpr const char* kWordSidecarName = "words.json";

/// Writes a catalog with the standard on-disk layout: grayscale studio
/// images (one product each) under train/, RGB shelf composites of 6-30
/// same-class products under test/ with noise, blur, and occlusion, plus a
/// words.json sidecar describing where words were printed on training images.
/// Output is a pure function of the parameters.
Catalog generate_synthetic(const SyntheticParams& params, const std::filesystem::path& out_dir);

/// Shelf clutter with no products, used for notification-threshold checks.
GrayImage render_background(int width, int height, std::uint64_t seed);

/// Number of product renderings in each composite, by test index; recorded in
/// <out_dir>/composition.csv by generate_synthetic.
std::vector<int> read_composition(const std::filesystem::path& dir);

WordSidecar read_word_sidecar(const std::filesystem::path& path);

/// Width in pixels of a printed word.
int printed_word_width(const std::string& word);
inline constexpr int kPrintedWordHeight = 7;

/// Prints a word as a high-frequency stripe block with its top-left at (x, y).
void print_word(GrayImage& image, const std::string& word, int x, int y, float ink, float paper);

std::vector<std::string> default_class_names(int count);

}  // namespace shelf
