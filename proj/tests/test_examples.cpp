// Worked examples for each module, mostly small analytic cases.

#include "fixtures.hpp"
#include "oracles.hpp"

#include "shelf/activelearn.hpp"
#include "shelf/error.hpp"
#include "shelf/evaluate.hpp"
#include "shelf/linear_svm.hpp"
#include "shelf/random.hpp"
#include "shelf/svm.hpp"
#include "shelf/textmap.hpp"

#include <doctest.h>

#include <fstream>
#include <numeric>

using namespace shelf;
namespace fs = std::filesystem;

namespace {

/// Coffee images all carry "arabica"; "mocha" is on 8 coffee and 2 tea images.
SyntheticParams coffee_catalog() {
    SyntheticParams p;
    p.num_classes = 2;
    p.per_class = 8;
    p.shelf_images = 2;
    p.max_products = 6;
    p.seed = 4;
    p.class_names = {"coffee", "tea"};
    p.words = {{"arabica", {8, 0}}, {"mocha", {8, 2}}};
    return p;
}

}  // namespace

TEST_SUITE("dataset") {
    TEST_CASE("single class with an empty manifest") {
        fixture::TempDir dir("one-class");
        fs::create_directories(dir.path() / "train" / "soup");
        write_png(dir.path() / "train" / "soup" / "a.png", GrayImage(16, 16, 0.5f));
        std::ofstream(dir.path() / kManifestName) << "";
        const Catalog c = load_catalog(dir.path());
        CHECK(c.num_classes() == 1);
        CHECK(c.test_images.empty());
    }

    TEST_CASE("two classes, five images, four composites") {
        fixture::TempDir dir("2-5-4");
        SyntheticParams p;
        p.num_classes = 2;
        p.per_class = 5;
        p.shelf_images = 4;
        p.seed = 1;
        const Catalog c = generate_synthetic(p, dir.path());
        CHECK(c.train_images[0].size() + c.train_images[1].size() == 10);
        CHECK(c.test_images.size() == 4);
        for (const auto& t : c.test_images) CHECK((t.label == 0 || t.label == 1));
    }

    TEST_CASE("empty learning set") {
        const auto s = split_for_learning(50, SplitSpec{0, 50, 1, 1, 0}, 0);
        CHECK(s.learning.empty());
        CHECK(s.testing.size() == 50);
    }
}

TEST_SUITE("imagecore") {
    TEST_CASE("gray input keeps its intensity and shape") {
        RgbImage rgb{3, 2, std::vector<std::uint8_t>(18, 128)};
        const GrayImage g = to_grayscale(rgb);
        CHECK(g.width == 3);
        CHECK(g.height == 2);
        for (float v : g.values) CHECK(v == doctest::Approx(128.0 / 255.0).epsilon(1e-4));
    }

    TEST_CASE("two-pixel z-score") {
        GrayImage img(2, 1);
        img.values = {0.0f, 1.0f};
        const NormalizedImage n = zscore_normalize(img);
        CHECK(n.values[0] == doctest::Approx(-1.0));
        CHECK(n.values[1] == doctest::Approx(1.0));
    }

    TEST_CASE("seven-level pyramid of a 1080-row image") {
        const auto levels = build_pyramid(GrayImage(810, 1080, 0.5f), 7, std::sqrt(0.5));
        REQUIRE(levels.size() == 7);
        CHECK(std::abs(levels.back().height - 135) <= 1);
        CHECK(build_pyramid(GrayImage(40, 40), 1, 0.5).size() == 1);
        CHECK(build_pyramid(GrayImage(16, 16), 7, std::sqrt(0.5)).size() < 7);
    }
}

TEST_SUITE("hog") {
    TEST_CASE("64x64 gives an 8x8 grid") {
        const HogGrid g = compute_hog(GrayImage(64, 64, 0.1f));
        CHECK(g.cells_x == 8);
        CHECK(g.cells_y == 8);
    }
}

TEST_SUITE("patchmine") {
    TEST_CASE("seed sampling bounds, rejection and determinism") {
        const auto& s = fixture::Shared::get();
        std::vector<ImageGrids> grids;
        for (const auto& ref : s.catalog.train_images[0]) grids.push_back(compute_grids(s.catalog.load_train(ref), 7, std::sqrt(0.5)));
        const auto a = sample_seeds(grids, 25, 6, 3);
        std::size_t usable_levels = 0;
        for (const auto& g : grids)
            for (const auto& l : g.levels) usable_levels += l.fits(6, 6);
        CHECK(a.size() <= 25 * usable_levels);
        CHECK_FALSE(a.empty());
        const auto b = sample_seeds(grids, 25, 6, 3);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].descriptor == b[i].descriptor);

        const std::vector<ImageGrids> flat{compute_grids(GrayImage(96, 96, 0.5f), 3, std::sqrt(0.5))};
        CHECK(sample_seeds(flat, 25, 6, 3).empty());
    }

    TEST_CASE("clustering every candidate alone drops them all") {
        const auto& s = fixture::Shared::get();
        const std::vector<ImageGrids> grids{compute_grids(s.catalog.load_train(s.catalog.train_images[0][0]), 1, 0.7)};
        const auto cands = sample_seeds(grids, 6, 6, 1);
        REQUIRE(cands.size() >= 2);
        for (const auto& cluster : cluster_candidates(cands, static_cast<int>(cands.size()), 1)) CHECK(cluster.size() >= 2);
    }

    TEST_CASE("separable toy descriptors are split with a positive margin") {
        std::vector<std::vector<float>> pos, neg;
        for (int i = 0; i < 10; ++i) {
            pos.push_back({1.0f + 0.1f * i, 0.5f});
            neg.push_back({-1.0f - 0.1f * i, 0.5f});
        }
        LinearSvmOptions opt;
        opt.c = 10.0;
        const LinearSvm d = train_linear_svm(pos, neg, opt);
        for (const auto& x : pos) CHECK(d.score(x) > 0.0);
        for (const auto& x : neg) CHECK(d.score(x) < 0.0);
    }

    TEST_CASE("rank score examples") {
        std::vector<ScoredHit> table;
        for (int i = 0; i < 5; ++i) table.push_back({2.0f, true});
        for (int i = 0; i < 5; ++i) table.push_back({1.0f, false});
        CHECK(rank_score(table, 10, 1.0) == doctest::Approx(2.5));
        const std::vector<ScoredHit> pure(10, ScoredHit{0.8f, true});
        CHECK(rank_score(pure, 10, 1.0) == doctest::Approx(1.8));
    }

    TEST_CASE("top detector selection sizes") {
        std::vector<RankedDetector> many(500), few(50);
        CHECK(select_top(many, kDefaultTopDetectors).size() == 210);
        CHECK(select_top(few, kDefaultTopDetectors).size() == 50);
    }

    TEST_CASE("zero rounds still yields ranked detectors") {
        const auto& s = fixture::Shared::get();
        MiningParams p = fixture::quick_mining();
        p.rounds = 0;
        const auto grids = training_grids(s.catalog, p);
        std::vector<ImageGrids> negatives(grids[1].begin(), grids[1].begin() + 3);
        negatives.insert(negatives.end(), grids[2].begin(), grids[2].begin() + 3);
        const auto ranked = mine_class(0, grids[0], negatives, p);
        REQUIRE_FALSE(ranked.empty());
        for (std::size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i - 1].score >= ranked[i].score);
    }
}

TEST_SUITE("encoder") {
    TEST_CASE("pasted training patch scores as at its source") {
        const auto& s = fixture::Shared::get();
        const GrayImage src = s.catalog.load_train(s.catalog.train_images[2][0]);
        const PatchDetector& det = s.bank.classes[2].front();
        const HogGrid grid = compute_hog(src);
        float best = -1e9f;
        for (int y = 0; y + det.window_h <= grid.cells_y; ++y)
            for (int x = 0; x + det.window_w <= grid.cells_x; ++x) best = std::max(best, det.score_at(grid, x, y));
        // Same pixels on an 8-pixel-aligned canvas that is otherwise identical.
        GrayImage canvas(src.width + 16, src.height + 16, 0.0f);
        for (int y = 0; y < src.height; ++y)
            for (int x = 0; x < src.width; ++x) canvas.at(x, y) = src.at(x, y);
        const HogGrid g2 = compute_hog(canvas);
        float best2 = -1e9f;
        for (int y = 0; y + det.window_h <= grid.cells_y - 1; ++y)
            for (int x = 0; x + det.window_w <= grid.cells_x - 1; ++x) best2 = std::max(best2, det.score_at(g2, x, y));
        float best_src_inner = -1e9f;
        for (int y = 0; y + det.window_h <= grid.cells_y - 1; ++y)
            for (int x = 0; x + det.window_w <= grid.cells_x - 1; ++x) best_src_inner = std::max(best_src_inner, det.score_at(grid, x, y));
        CHECK(best2 == doctest::Approx(best_src_inner).epsilon(1e-4));
        CHECK(best >= best_src_inner);
    }

    TEST_CASE("constant image scores every window at the bias") {
        const auto& s = fixture::Shared::get();
        const GrayImage flat(120, 120, 0.6f);
        const auto dets = detect_all(flat, s.bank);
        std::size_t idx = 0;
        for (const auto& cls : s.bank.classes)
            for (const auto& d : cls) {
                const bool fires = d.bias > d.fire_threshold;
                const bool found = std::any_of(dets.begin(), dets.end(), [&](const Detection& x) { return x.detector == idx; });
                CHECK(found == fires);
                for (const auto& x : dets)
                    if (x.detector == idx) CHECK(x.score == d.bias);
                ++idx;
            }
    }

    TEST_CASE("single detection bookkeeping") {
        Detection d;
        d.class_id = 3;
        d.score = 0.7f;
        d.center_x = 10;
        d.center_y = 10;
        const std::vector<Detection> one{d};
        const FeatureVector v = pool_detections(one, 5, FeatureMode::Pyramid, 100, 100, -1.5f);
        CHECK(v.bin(3) == 0.7f);
        CHECK(v.values[5 + 3] == 0.7f);
        CHECK(v.bin(3, Region::TopRight) == -1.5f);
        CHECK(v.bin(3, Region::BottomLeft) == -1.5f);
        CHECK(v.bin(3, Region::BottomRight) == -1.5f);
    }

    TEST_CASE("highest score decision examples") {
        CHECK(highest_score_class(FeatureVector{FeatureMode::Whole, {-1.5f, 0.2f, -0.3f}}, -1.5f) == 1);
        CHECK_FALSE(highest_score_class(FeatureVector{FeatureMode::Whole, {-1.5f, -1.5f}}, -1.5f).has_value());
        FeatureVector br{FeatureMode::Pyramid, std::vector<float>(15, -1.5f)};
        br.values[4 * 3 + 2] = 0.4f;
        CHECK(highest_score_class(br, -1.5f) == 2);
    }
}

TEST_SUITE("svm") {
    TEST_CASE("conflicting duplicate is absorbed by the soft margin") {
        std::vector<FeatureVector> x;
        std::vector<int> y;
        for (int i = 0; i < 6; ++i) {
            x.push_back({FeatureMode::Whole, {static_cast<float>(i) * 0.1f, 1.0f}});
            y.push_back(0);
            x.push_back({FeatureMode::Whole, {static_cast<float>(i) * 0.1f, -1.0f}});
            y.push_back(1);
        }
        x.push_back({FeatureMode::Whole, {0.2f, 1.0f}});
        y.push_back(1);
        SvmParams p;
        p.kernel = Kernel::Linear;
        p.c = 1.0;
        const SvmModel m = train_ovr(x, y, {"a", "b"}, p);
        int wrong = 0;
        for (std::size_t i = 0; i < x.size(); ++i) wrong += predict(m, x[i]).label != y[i];
        CHECK(wrong >= 1);
        CHECK(wrong <= 2);
    }

    TEST_CASE("tie rule and repeatable scoring") {
        const std::vector<double> tie{0.3, 0.3, -1.0};
        CHECK(predict_values(tie).label == 0);
        std::vector<FeatureVector> x{{FeatureMode::Whole, {1.0f, 0.0f}}, {FeatureMode::Whole, {0.9f, 0.1f}},
                                     {FeatureMode::Whole, {0.0f, 1.0f}}, {FeatureMode::Whole, {0.1f, 0.9f}},
                                     {FeatureMode::Whole, {-1.0f, -1.0f}}, {FeatureMode::Whole, {-0.9f, -1.1f}}};
        const std::vector<int> y{0, 0, 1, 1, 2, 2};
        const SvmModel m = train_ovr(x, y, {"a", "b", "c"}, {});
        const Prediction p = predict(m, x[4]);
        CHECK(p.label == 2);
        CHECK(p.score > 0.0);
        CHECK(predict(m, x[4]).score == p.score);
    }

    TEST_CASE("notification threshold examples") {
        std::vector<FeatureVector> x{{FeatureMode::Whole, {1.0f}}, {FeatureMode::Whole, {-1.0f}}};
        const SvmModel m = train_ovr(x, std::vector<int>{0, 1}, {"a", "b"}, {});
        const double score = predict(m, x[0]).score;
        CHECK_FALSE(predict_thresholded(m, x[0], score + 0.1).has_value());
        CHECK(predict_thresholded(m, x[0], -std::numeric_limits<double>::infinity()) == 0);
    }
}

TEST_SUITE("evaluate") {
    TEST_CASE("all correct and the 1-of-2 / 2-of-2 case") {
        const std::vector<int> t{0, 1, 2, 1};
        CHECK(evaluate(t, t, 3).accuracy == 1.0);
        const std::vector<int> truth{0, 0, 1, 1}, pred{0, 1, 1, 1};
        CHECK(evaluate(pred, truth, 2).accuracy == 0.75);
        for (const auto& row : evaluate(pred, truth, 2).confusion)
            CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    }

    TEST_CASE("random guessing over four balanced classes averages a quarter") {
        Rng rng(99);
        double sum = 0.0;
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<int> truth(40), pred(40);
            for (int i = 0; i < 40; ++i) {
                truth[i] = i % 4;
                pred[i] = rng.uniform_int(0, 3);
            }
            sum += evaluate(pred, truth, 4).accuracy;
        }
        CHECK(std::abs(sum / 1000 - 0.25) <= 0.05);
    }

    TEST_CASE("tau above every score attempts nothing") {
        const std::vector<int> truth{0, 1}, pred{0, 0};
        const std::vector<double> scores{0.3, 0.6}, taus{1.0};
        const auto c = pr_curve(pred, scores, truth, taus);
        CHECK(c[0].recall == 0.0);
        CHECK(c[0].precision == 1.0);
    }
}

TEST_SUITE("bow") {
    TEST_CASE("default vocabulary has 200 words and histograms sum to one") {
        const auto& s = fixture::Shared::get();
        std::vector<GrayImage> images;
        std::vector<int> labels;
        for (std::size_t c = 0; c < s.catalog.num_classes(); ++c)
            for (const auto& ref : s.catalog.train_images[c]) {
                images.push_back(s.catalog.load_train(ref));
                labels.push_back(static_cast<int>(c));
            }
        const BowModel m = bow_baseline_train(images, labels, s.catalog.classes, BowParams{});
        CHECK(m.vocabulary.words.size() == 200);
        for (std::size_t i = 0; i < 3; ++i) {
            const FeatureVector h = bow_encode(s.catalog.load_test(s.catalog.test_images[i].ref), m.vocabulary);
            CHECK(std::accumulate(h.values.begin(), h.values.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_SUITE("textmap") {
    TEST_CASE("segmentation examples") {
        TextScoreMap low{60, 60, std::vector<float>(3600, 10.0f)};
        CHECK(segment_text_regions(low).empty());
        TextScoreMap block{80, 80, std::vector<float>(6400, 0.0f)};
        for (int y = 20; y < 50; ++y)
            for (int x = 20; x < 50; ++x) block.scores[static_cast<std::size_t>(y) * 80 + x] = 11.0f;
        const auto r = segment_text_regions(block);
        REQUIRE(r.size() == 1);
        CHECK(r[0] == Rect{14, 14, 42, 42});
        CHECK(r == oracle::segment(block, 10.0f, 6, 230));
    }

    TEST_CASE("constructed coffee and tea catalog") {
        fixture::TempDir dir("coffee");
        const Catalog cat = generate_synthetic(coffee_catalog(), dir.path());
        auto ocr = SyntheticOcr::from_catalog(cat);

        // Closed loop on one image: the adapter reads back exactly the printed words.
        const std::string ref = cat.train_images[0][0];
        const auto tokens = image_tokens(ref, cat.load_train(ref), *ocr, GradientDensityScorer{});
        std::vector<std::string> sorted = tokens;
        std::sort(sorted.begin(), sorted.end());
        CHECK(sorted == std::vector<std::string>{"arabica", "mocha"});

        const WordClassIndex idx = build_word_index(cat, *ocr, GradientDensityScorer{});
        CHECK(idx.count(0, "arabica") == 8);
        CHECK(idx.count(0, "mocha") == 8);
        CHECK(idx.count(1, "mocha") == 2);
        const WordQuery a = query_word(idx, "arabica");
        CHECK(a.kind == WordQuery::Kind::AutoMapped);
        CHECK(idx.classes()[a.auto_class()] == "coffee");
        const WordQuery m = query_word(idx, "mocha");
        REQUIRE(m.ranked.size() == 2);
        CHECK(m.ranked[0].count == 8);
        CHECK(m.ranked[0].confidence == doctest::Approx(0.8));
        CHECK(m.ranked[1].confidence == doctest::Approx(0.2));
        CHECK(query_word(idx, "zzzz").kind == WordQuery::Kind::Unknown);
    }

    TEST_CASE("region without glyphs reads as empty") {
        fixture::TempDir dir("coffee-empty");
        const Catalog cat = generate_synthetic(coffee_catalog(), dir.path());
        auto ocr = SyntheticOcr::from_catalog(cat);
        const std::string ref = cat.train_images[1][7];  // a tea image without mocha
        const GrayImage img = cat.load_train(ref);
        CHECK(ocr->recognize(ref, img, Rect{0, 0, 4, 4}) == "");
    }

    TEST_CASE("empty catalog gives an empty index") {
        Catalog empty;
        SyntheticOcr ocr(WordSidecar{});
        const WordClassIndex idx = build_word_index(empty, ocr, GradientDensityScorer{});
        CHECK(idx.num_classes() == 0);
    }

    TEST_CASE("token examples") {
        CHECK(normalize_token("Coffee,") == "coffee");
        CHECK_FALSE(normalize_token("a").has_value());
    }
}

TEST_SUITE("activelearn") {
    TEST_CASE("argmin selection of one item") {
        // Decision values chosen through a one-feature linear model: f_c(x) = w_c x + b_c.
        std::vector<FeatureVector> x{{FeatureMode::Whole, {2.0f}}, {FeatureMode::Whole, {-2.0f}}};
        SvmParams p;
        p.kernel = Kernel::Linear;
        const SvmModel m = train_ovr(x, std::vector<int>{0, 1}, {"a", "b"}, p);
        std::vector<FeatureVector> pool{{FeatureMode::Whole, {1.5f}}, {FeatureMode::Whole, {0.05f}}, {FeatureMode::Whole, {-0.8f}}};
        const std::vector<std::string> refs{"p0", "p1", "p2"};
        const auto q = select_uncertain(m, refs, pool, 1);
        REQUIRE(q.size() == 1);
        CHECK(q[0].ref == "p1");
    }
}
