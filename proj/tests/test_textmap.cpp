#include "fixtures.hpp"
#include "oracles.hpp"

#include "shelf/error.hpp"
#include "shelf/random.hpp"
#include "shelf/textmap.hpp"

#include <doctest.h>

#include <numeric>

using namespace shelf;

namespace {

TextScoreMap blank(int w, int h) { return TextScoreMap{w, h, std::vector<float>(static_cast<std::size_t>(w) * h, 0.0f)}; }

void fill(TextScoreMap& m, int x, int y, int w, int h, float v) {
    for (int yy = y; yy < y + h; ++yy)
        for (int xx = x; xx < x + w; ++xx) m.scores[static_cast<std::size_t>(yy) * m.width + xx] = v;
}

}  // namespace

TEST_SUITE("textmap") {
    TEST_CASE("10x10 block survives, 2x2 block is discarded") {
        TextScoreMap m = blank(80, 60);
        fill(m, 10, 10, 10, 10, 50.0f);
        fill(m, 50, 40, 2, 2, 50.0f);
        const auto rects = segment_text_regions(m);
        REQUIRE(rects.size() == 1);
        // Six 3x3 dilations grow the block by 6 pixels on every side.
        CHECK(rects[0] == Rect{4, 4, 22, 22});
    }

    TEST_CASE("threshold is strict") {
        TextScoreMap m = blank(60, 60);
        fill(m, 20, 20, 12, 12, 10.0f);
        CHECK(segment_text_regions(m).empty());
        fill(m, 20, 20, 12, 12, 10.01f);
        CHECK(segment_text_regions(m).size() == 1);
    }

    TEST_CASE("segmentation matches the pixel simulation on random maps") {
        Rng rng(21);
        for (int t = 0; t < 10; ++t) {
            const int w = rng.uniform_int(30, 90), h = rng.uniform_int(30, 90);
            TextScoreMap m = blank(w, h);
            for (auto& v : m.scores) v = rng.bernoulli(0.01) ? static_cast<float>(rng.uniform(0, 40)) : 0.0f;
            CHECK(segment_text_regions(m) == oracle::segment(m, 10.0f, 6, 230));
        }
    }

    TEST_CASE("gradient density scorer separates stripes from flat paper") {
        GrayImage img(120, 40, 0.9f);
        print_word(img, "granola", 10, 10, 0.1f, 0.9f);
        const TextScoreMap m = GradientDensityScorer{}.score(img);
        CHECK(m.at(12, 13) > 10.0f);
        CHECK(m.at(110, 35) == 0.0f);
    }

    TEST_CASE("token normalisation") {
        CHECK(normalize_token("  Granola!") == "granola");
        CHECK(normalize_token("(Oats)") == "oats");
        CHECK_FALSE(normalize_token("ab").has_value());
        CHECK_FALSE(normalize_token("500g").has_value());
        CHECK_FALSE(normalize_token("...").has_value());
        CHECK(normalize_token("v8juice") == "v8juice");
    }

    TEST_CASE("word queries") {
        WordClassIndex idx({"coffee", "tea", "milk"});
        idx.add(0, "arabica", 4);
        idx.add(0, "organic", 1);
        idx.add(1, "organic", 3);
        idx.add(2, "organic", 1);
        const WordQuery a = query_word(idx, "Arabica");
        CHECK(a.kind == WordQuery::Kind::AutoMapped);
        CHECK(a.auto_class() == 0);
        const WordQuery r = query_word(idx, "organic");
        REQUIRE(r.kind == WordQuery::Kind::Ranked);
        REQUIRE(r.ranked.size() == 3);
        CHECK(r.ranked[0].class_id == 1);
        CHECK(r.ranked[1].class_id == 0);  // tie with class 2 goes to the lower index
        CHECK(r.ranked[0].confidence == doctest::Approx(0.6));
        CHECK(query_word(idx, "decaf").kind == WordQuery::Kind::Unknown);
        CHECK(query_json(idx, a)["auto"] == "coffee");
        CHECK(query_json(idx, r)["ranked"].size() == 3);
    }

    TEST_CASE("index json round trip and merge") {
        WordClassIndex a({"x", "y"}), b({"x", "y"});
        a.add(0, "alpha", 2);
        b.add(0, "alpha", 1);
        b.add(1, "beta", 5);
        a.merge(b);
        CHECK(a.count(0, "alpha") == 3);
        CHECK(a.total(1) == 5);
        CHECK(WordClassIndex::from_json(a.to_json()) == a);
        fixture::TempDir dir("index");
        a.save(dir.path() / "words.json");
        CHECK(WordClassIndex::load(dir.path() / "words.json") == a);
    }

    TEST_CASE("OCR adapter contract") {
        WordSidecar sidecar;
        sidecar["train/a/1.png"] = {{"granola", Rect{10, 10, 40, 7}}};
        SyntheticOcr ocr(sidecar);
        const GrayImage img(80, 40, 0.5f);
        const std::vector<Rect> regions{{5, 5, 50, 20}, {60, 30, 10, 5}, {0, 0, 30, 30}};
        ocr.fail_on(regions[2]);
        const auto words = recognize_words("train/a/1.png", img, regions, &ocr);
        CHECK(words == std::vector<std::string>{"granola", "", ""});
        CHECK_THROWS_AS(recognize_words("x", img, regions, nullptr), Error);
    }

    TEST_CASE("index built from the synthetic catalog maps class names") {
        const auto& s = fixture::Shared::get();
        auto ocr = SyntheticOcr::from_catalog(s.catalog);
        const WordClassIndex idx = build_word_index(s.catalog, *ocr, GradientDensityScorer{});
        int mapped = 0;
        for (std::size_t c = 0; c < s.catalog.num_classes(); ++c) {
            const WordQuery q = query_word(idx, s.catalog.classes[c]);
            if (q.kind == WordQuery::Kind::AutoMapped && q.auto_class() == static_cast<int>(c)) ++mapped;
        }
        CHECK(mapped == static_cast<int>(s.catalog.num_classes()));
    }
}
