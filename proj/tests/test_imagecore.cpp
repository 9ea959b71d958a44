#include "oracles.hpp"

#include "shelf/error.hpp"
#include "shelf/hog.hpp"
#include "shelf/image.hpp"
#include "shelf/random.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>

using namespace shelf;

namespace {

GrayImage random_image(int w, int h, std::uint64_t seed) {
    GrayImage img(w, h);
    Rng rng(seed);
    for (auto& v : img.values) v = static_cast<float>(rng.uniform());
    return img;
}

}  // namespace

TEST_SUITE("imagecore") {
    TEST_CASE("grayscale uses luma weights") {
        RgbImage rgb{2, 1, {255, 0, 0, 0, 0, 255}};
        const GrayImage g = to_grayscale(rgb);
        REQUIRE(g.width == 2);
        CHECK(g.at(0, 0) == doctest::Approx(0.299).epsilon(1e-3));
        CHECK(g.at(1, 0) == doctest::Approx(0.114).epsilon(1e-3));
    }

    TEST_CASE("z-score has zero mean and unit variance") {
        const NormalizedImage n = zscore_normalize(random_image(31, 17, 1));
        CHECK_FALSE(n.degenerate);
        const double mean = std::accumulate(n.values.begin(), n.values.end(), 0.0) / n.values.size();
        double var = 0.0;
        for (double v : n.values) var += (v - mean) * (v - mean);
        var /= n.values.size();
        CHECK(std::abs(mean) < 1e-9);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
    }

    TEST_CASE("constant image normalises to zeros and is flagged") {
        const NormalizedImage n = zscore_normalize(GrayImage(8, 8, 0.4f));
        CHECK(n.degenerate);
        for (double v : n.values) CHECK(v == 0.0);
    }

    TEST_CASE("pyramid levels shrink by the factor and stop at the minimum side") {
        const auto levels = build_pyramid(GrayImage(100, 60, 0.5f), 7, std::sqrt(0.5), 16);
        REQUIRE(levels.size() >= 2);
        CHECK(levels[0].width == 100);
        CHECK(levels[1].width == static_cast<int>(std::lround(100 * std::sqrt(0.5))));
        for (const auto& l : levels) CHECK(std::min(l.width, l.height) >= 16);
        CHECK_THROWS_AS(build_pyramid(GrayImage(10, 10), 0, 0.5), Error);
        CHECK_THROWS_AS(build_pyramid(GrayImage(10, 10), 2, 1.5), Error);
    }

    TEST_CASE("limit_height preserves aspect") {
        const GrayImage big(400, 2000, 0.2f);
        const GrayImage small = limit_height(big, 1080);
        CHECK(small.height == 1080);
        CHECK(small.width == 216);
        CHECK(limit_height(GrayImage(10, 20), 1080).height == 20);
    }

    TEST_CASE("png round trip and in-memory decode") {
        const GrayImage img = random_image(19, 11, 2);
        const auto path = std::filesystem::temp_directory_path() / "shelf-imagecore-rt.png";
        write_png(path, img);
        const GrayImage back = read_gray(path);
        REQUIRE(back.width == 19);
        for (std::size_t i = 0; i < img.values.size(); ++i) CHECK(std::abs(back.values[i] - img.values[i]) <= 1.0 / 255 + 1e-6);
        std::ifstream f(path, std::ios::binary);
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), {});
        CHECK(decode_gray(bytes) == back);
        std::filesystem::remove(path);
        const std::vector<std::uint8_t> junk{1, 2, 3};
        CHECK_THROWS_AS(decode_gray(junk), Error);
    }
}

TEST_SUITE("hog") {
    TEST_CASE("grid shape follows the cell formula") {
        for (auto [w, h] : {std::pair{8, 8}, {64, 48}, {67, 50}, {15, 9}}) {
            const HogGrid g = compute_hog(GrayImage(w, h, 0.3f));
            CHECK(g.cells_x == (w - 8) / 8 + 1);
            CHECK(g.cells_y == (h - 8) / 8 + 1);
            CHECK(g.data.size() == static_cast<std::size_t>(g.cells_x * g.cells_y * kHogCellLength));
        }
        CHECK_THROWS_AS(compute_hog(GrayImage(7, 20)), Error);
    }

    TEST_CASE("cell histograms match a direct per-cell recomputation") {
        const GrayImage img = random_image(40, 32, 3);
        int cx = 0, cy = 0, ox = 0, oy = 0;
        const auto fast = cell_histograms(img, cx, cy);
        const auto slow = oracle::cell_histograms(img, ox, oy);
        REQUIRE(cx == ox);
        REQUIRE(cy == oy);
        for (std::size_t i = 0; i < fast.size(); ++i) CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-4));
    }

    TEST_CASE("a vertical edge votes into the horizontal-gradient bin") {
        GrayImage img(32, 32, 0.0f);
        for (int y = 0; y < 32; ++y)
            for (int x = 16; x < 32; ++x) img.at(x, y) = 1.0f;
        int cx = 0, cy = 0;
        const auto hist = cell_histograms(img, cx, cy);
        double bin0 = 0.0, rest = 0.0;
        for (std::size_t c = 0; c < hist.size() / 9; ++c) {
            bin0 += hist[c * 9];
            for (int b = 1; b < 9; ++b) rest += hist[c * 9 + b];
        }
        CHECK(bin0 > 0.0);
        CHECK(rest == 0.0);
        // Two pixels per row carry gradient 1 over 32 rows. The outermost four
        // rows at the top and bottom lose the share of their vote that falls
        // outside the grid (0.4375 + 0.3125 + 0.1875 + 0.0625 = 1 row each).
        CHECK(bin0 == doctest::Approx(2.0 * (32 - 2)));
    }

    TEST_CASE("descriptor entries lie in [0, 1] and have equal length") {
        const HogGrid g = compute_hog(random_image(56, 40, 4));
        for (float v : g.data) {
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
        }
        CHECK(g.cell(0, 0).size() == static_cast<std::size_t>(kHogCellLength));
        CHECK(g.window(1, 1, 3, 2).size() == static_cast<std::size_t>(6 * kHogCellLength));
    }

    TEST_CASE("flat image has zero descriptor and zero energy") {
        const HogGrid g = compute_hog(GrayImage(24, 24, 0.7f));
        for (float v : g.data) CHECK(v == 0.0f);
        CHECK(g.window_energy(0, 0, 3, 3) == 0.0);
    }
}
