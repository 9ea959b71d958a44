#include "fixtures.hpp"

#include "shelf/bank_io.hpp"
#include "shelf/error.hpp"
#include "shelf/kmeans.hpp"
#include "shelf/linear_svm.hpp"
#include "shelf/patchmine.hpp"
#include "shelf/random.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

using namespace shelf;

namespace {

double hinge_primal(const std::vector<double>& w, double b, const std::vector<std::vector<float>>& pos,
                    const std::vector<std::vector<float>>& neg, double c) {
    double reg = b * b;
    for (double v : w) reg += v * v;
    double loss = 0.0;
    auto add = [&](const std::vector<float>& x, double y) {
        double s = b;
        for (std::size_t d = 0; d < x.size(); ++d) s += w[d] * x[d];
        loss += std::max(0.0, 1.0 - y * s);
    };
    for (const auto& x : pos) add(x, 1.0);
    for (const auto& x : neg) add(x, -1.0);
    return 0.5 * reg + c * loss;
}

std::vector<std::vector<float>> gaussian_cloud(std::size_t n, std::size_t dim, double centre, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<float>> out(n, std::vector<float>(dim));
    for (auto& x : out)
        for (auto& v : x) v = static_cast<float>(centre + 0.6 * rng.normal());
    return out;
}

}  // namespace

TEST_SUITE("patchmine") {
    TEST_CASE("linear SVM reaches the primal optimum") {
        const auto pos = gaussian_cloud(30, 5, 0.5, 1);
        const auto neg = gaussian_cloud(60, 5, -0.5, 2);
        for (double c : {0.1, 1.0}) {
            LinearSvmOptions opt;
            opt.c = c;
            opt.tolerance = 1e-6;
            const LinearSvm svm = train_linear_svm(pos, neg, opt);
            std::vector<double> w(svm.weights.begin(), svm.weights.end());
            const double base = hinge_primal(w, svm.bias, pos, neg, c);
            // Convex objective: no small step in any coordinate direction may improve it.
            for (std::size_t d = 0; d <= w.size(); ++d)
                for (double step : {1e-3, -1e-3}) {
                    auto w2 = w;
                    double b2 = svm.bias;
                    if (d < w.size())
                        w2[d] += step;
                    else
                        b2 += step;
                    CHECK(hinge_primal(w2, b2, pos, neg, c) >= base - 1e-4);
                }
        }
    }

    TEST_CASE("linear SVM rejects indistinguishable sets") {
        const std::vector<std::vector<float>> same{{1.0f, 2.0f}, {3.0f, 4.0f}};
        CHECK_THROWS_AS(train_linear_svm(same, same, {}), Error);
    }

    TEST_CASE("k-means separates well-spaced blobs and is seeded") {
        std::vector<std::vector<float>> pts;
        Rng rng(4);
        for (int c = 0; c < 3; ++c)
            for (int i = 0; i < 20; ++i) pts.push_back({static_cast<float>(10 * c + rng.normal() * 0.1), static_cast<float>(rng.normal() * 0.1)});
        const auto a = kmeans(pts, 3, 9);
        const auto b = kmeans(pts, 3, 9);
        CHECK(a.assignment == b.assignment);
        for (int c = 0; c < 3; ++c) {
            std::set<int> ids;
            for (int i = 0; i < 20; ++i) ids.insert(a.assignment[c * 20 + i]);
            CHECK(ids.size() == 1);
        }
        CHECK_THROWS_AS(kmeans(pts, 0, 1), Error);
        CHECK_THROWS_AS(kmeans(pts, 61, 1), Error);
    }

    TEST_CASE("rank score over the top hits") {
        // Top 3 by score: 0.9 (on), 0.8 (off), 0.5 (on); purity = 0.7, fraction = 2/3.
        const std::vector<ScoredHit> hits{{0.5f, true}, {0.9f, true}, {0.8f, false}, {0.1f, true}};
        CHECK(rank_score(hits, 3, 1.0) == doctest::Approx((0.9 + 0.5) / 2 + 2.0 / 3.0));
        CHECK(rank_score(hits, 3, 0.0) == doctest::Approx(0.7));
        const std::vector<ScoredHit> off{{1.0f, false}};
        CHECK(rank_score(off, 10, 1.0) == -std::numeric_limits<double>::infinity());
    }

    TEST_CASE("detector window scores equal a direct dot product") {
        const auto& shared = fixture::Shared::get();
        const GrayImage img = shared.catalog.load_train(shared.catalog.train_images[0][0]);
        const HogGrid grid = compute_hog(img);
        const PatchDetector& det = shared.bank.classes[0].front();
        std::vector<float> all;
        det.score_all(grid, all);
        const int nx = grid.cells_x - det.window_w + 1;
        REQUIRE(all.size() == static_cast<std::size_t>(nx * (grid.cells_y - det.window_h + 1)));
        for (int y = 0; y + det.window_h <= grid.cells_y; ++y)
            for (int x = 0; x < nx; ++x) {
                const auto win = grid.window(x, y, det.window_w, det.window_h);
                double s = det.bias;
                for (std::size_t i = 0; i < win.size(); ++i) s += static_cast<double>(det.weights[i]) * win[i];
                CHECK(all[static_cast<std::size_t>(y * nx + x)] == doctest::Approx(s).epsilon(1e-5));
                CHECK(det.score_at(grid, x, y) == doctest::Approx(s).epsilon(1e-5));
            }
    }

    TEST_CASE("firings respect threshold, per-image cap and order") {
        const auto& shared = fixture::Shared::get();
        const auto grids = training_grids(shared.catalog, fixture::quick_mining());
        const PatchDetector& det = shared.bank.classes[1].front();
        const auto firings = detect_firings(grids[1], det, 3, 0.3);
        REQUIRE_FALSE(firings.empty());
        std::map<std::size_t, int> per_image;
        for (std::size_t i = 0; i < firings.size(); ++i) {
            CHECK(firings[i].score > det.fire_threshold);
            ++per_image[firings[i].image];
            if (i > 0 && firings[i].image == firings[i - 1].image) CHECK(firings[i].score <= firings[i - 1].score);
            if (i > 0) CHECK(firings[i].image >= firings[i - 1].image);
        }
        for (auto [img, n] : per_image) CHECK(n <= 3);
    }

    TEST_CASE("mining halves are disjoint and cover the set") {
        const auto [a, b] = mining_halves(21, 3);
        CHECK(a.size() == 10);
        CHECK(b.size() == 11);
        std::set<std::size_t> all(a.begin(), a.end());
        all.insert(b.begin(), b.end());
        CHECK(all.size() == 21);
    }

    TEST_CASE("mined bank is ranked, capped and valid") {
        const auto& bank = fixture::Shared::get().bank;
        CHECK(bank.num_classes() == 3);
        for (std::size_t c = 0; c < bank.num_classes(); ++c) {
            CHECK_FALSE(bank.classes[c].empty());
            CHECK(bank.classes[c].size() <= 12);
            for (const auto& d : bank.classes[c]) {
                CHECK(d.class_id == static_cast<int>(c));
                CHECK(d.weights.size() == static_cast<std::size_t>(d.window_w * d.window_h * kHogCellLength));
                CHECK(d.fire_threshold == kDefaultFireThreshold);
            }
        }
    }

    TEST_CASE("seed sampling rejects images too small for a window") {
        const std::vector<ImageGrids> tiny{compute_grids(GrayImage(16, 16, 0.5f), 1, 0.7)};
        CHECK_THROWS_AS(sample_seeds(tiny, 5, 6, 0), Error);
    }

    TEST_CASE("select_top keeps the first entries") {
        std::vector<RankedDetector> ranked(4);
        for (int i = 0; i < 4; ++i) ranked[i].detector.bias = static_cast<float>(i);
        const auto top = select_top(ranked, 2);
        REQUIRE(top.size() == 2);
        CHECK(top[1].bias == 1.0f);
        CHECK(select_top(std::span<const RankedDetector>{}, 5).empty());
    }
}

TEST_SUITE("bank_io") {
    TEST_CASE("bank round trip is bit exact") {
        const auto& bank = fixture::Shared::get().bank;
        std::stringstream buf;
        write_bank(buf, bank);
        const std::string bytes = buf.str();
        CHECK(bytes.substr(0, 4) == "SHDB");
        const DetectorBank back = read_bank(buf);
        CHECK(back == bank);
        std::stringstream again;
        write_bank(again, back);
        CHECK(again.str() == bytes);
    }

    TEST_CASE("corrupt banks are rejected") {
        std::stringstream bad("XXXX0000");
        CHECK_THROWS_AS(read_bank(bad), Error);
        std::stringstream buf;
        write_bank(buf, fixture::Shared::get().bank);
        std::stringstream cut(buf.str().substr(0, buf.str().size() / 2));
        CHECK_THROWS_AS(read_bank(cut), Error);
    }
}
