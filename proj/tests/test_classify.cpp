#include "fixtures.hpp"
#include "oracles.hpp"

#include "shelf/bow.hpp"
#include "shelf/error.hpp"
#include "shelf/evaluate.hpp"
#include "shelf/random.hpp"
#include "shelf/svm.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace shelf;

namespace {

/// Three noisy clusters in 4 dimensions, one per class.
void blobs(std::vector<FeatureVector>& x, std::vector<int>& y, int per_class, std::uint64_t seed) {
    Rng rng(seed);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < per_class; ++i) {
            FeatureVector v{FeatureMode::Whole, std::vector<float>(4)};
            for (int d = 0; d < 4; ++d) v.values[d] = static_cast<float>((d == c ? 1.0 : -0.5) + 0.3 * rng.normal());
            x.push_back(v);
            y.push_back(c);
        }
}

}  // namespace

TEST_SUITE("svm") {
    TEST_CASE("SMO solution is feasible and closes the duality gap") {
        Rng rng(2);
        const std::size_t n = 40;
        std::vector<std::vector<double>> pts(n, std::vector<double>(3));
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = i % 2 ? 1 : -1;
            for (auto& v : pts[i]) v = 0.6 * y[i] + rng.normal();
        }
        std::vector<double> k(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double d2 = 0.0;
                for (int d = 0; d < 3; ++d) d2 += (pts[i][d] - pts[j][d]) * (pts[i][d] - pts[j][d]);
                k[i * n + j] = std::exp(-0.5 * d2);
            }
        for (double c : {0.5, 10.0}) {
            const BinarySolution s = solve_binary(k, y, c, 1e-6);
            double balance = 0.0, sum_alpha = 0.0, quad = 0.0, hinge = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                CHECK(s.alpha[i] >= 0.0);
                CHECK(s.alpha[i] <= c + 1e-12);
                balance += s.alpha[i] * y[i];
                sum_alpha += s.alpha[i];
            }
            CHECK(std::abs(balance) < 1e-9);
            for (std::size_t i = 0; i < n; ++i) {
                double f = s.bias;
                for (std::size_t j = 0; j < n; ++j) {
                    f += s.alpha[j] * y[j] * k[j * n + i];
                    quad += s.alpha[i] * s.alpha[j] * y[i] * y[j] * k[i * n + j];
                }
                hinge += std::max(0.0, 1.0 - y[i] * f);
            }
            const double primal = 0.5 * quad + c * hinge;
            const double dual = sum_alpha - 0.5 * quad;
            CHECK(primal - dual >= -1e-6);
            CHECK((primal - dual) / std::max(1.0, std::abs(primal)) < 1e-3);
            CHECK(dual_objective(k, y, s.alpha) == doctest::Approx(-dual));
        }
    }

    TEST_CASE("one-vs-rest separates clusters with both kernels") {
        std::vector<FeatureVector> x, tx;
        std::vector<int> y, ty;
        blobs(x, y, 15, 1);
        blobs(tx, ty, 10, 2);
        for (Kernel kernel : {Kernel::Linear, Kernel::Rbf}) {
            SvmParams p;
            p.kernel = kernel;
            p.c = 10.0;
            const SvmModel m = train_ovr(x, y, {"a", "b", "c"}, p);
            CHECK(m.num_classes() == 3);
            int correct = 0;
            for (std::size_t i = 0; i < tx.size(); ++i) correct += predict(m, tx[i]).label == ty[i];
            CHECK(correct >= 28);
            CHECK(params_of(m).kernel == kernel);
        }
    }

    TEST_CASE("retraining from params_of reproduces the model") {
        std::vector<FeatureVector> x;
        std::vector<int> y;
        blobs(x, y, 10, 3);
        SvmParams p;
        p.standardize = true;
        const SvmModel m = train_ovr(x, y, {"a", "b", "c"}, p);
        CHECK(train_ovr(x, y, {"a", "b", "c"}, params_of(m)) == m);
    }

    TEST_CASE("bad training input") {
        std::vector<FeatureVector> x;
        std::vector<int> y;
        blobs(x, y, 3, 4);
        CHECK_THROWS_AS(train_ovr(x, std::vector<int>(2, 0), {"a", "b", "c"}, {}), Error);
        CHECK_THROWS_AS(train_ovr(x, y, {"a"}, {}), Error);
        const SvmModel m = train_ovr(x, y, {"a", "b", "c"}, {});
        CHECK_THROWS_AS(predict(m, FeatureVector{FeatureMode::Whole, {1.0f}}), Error);
    }

    TEST_CASE("argmax prediction and notification threshold") {
        const std::vector<double> v{0.2, 0.9, 0.9, -1.0};
        const Prediction p = predict_values(v);
        CHECK(p.label == 1);
        CHECK(p.score == 0.9);
        std::vector<FeatureVector> x;
        std::vector<int> y;
        blobs(x, y, 8, 5);
        const SvmModel m = train_ovr(x, y, {"a", "b", "c"}, {});
        const Prediction q = predict(m, x[0]);
        CHECK(predict_thresholded(m, x[0], q.score - 1e-3) == q.label);
        CHECK_FALSE(predict_thresholded(m, x[0], q.score).has_value());
    }

    TEST_CASE("model serialization round trip") {
        std::vector<FeatureVector> x;
        std::vector<int> y;
        blobs(x, y, 8, 6);
        for (Kernel kernel : {Kernel::Linear, Kernel::Rbf}) {
            SvmParams p;
            p.kernel = kernel;
            const SvmModel m = train_ovr(x, y, {"a", "b", "c"}, p);
            std::stringstream buf;
            write_model(buf, m);
            const SvmModel back = read_model(buf);
            CHECK(back == m);
        }
        std::stringstream junk("SHSV\x09\x00\x00\x00");
        CHECK_THROWS_AS(read_model(junk), Error);
        CHECK(parse_kernel(kernel_name(Kernel::Rbf)) == Kernel::Rbf);
        CHECK_THROWS_AS(parse_kernel("poly"), Error);
    }
}

TEST_SUITE("evaluate") {
    TEST_CASE("mean per-class accuracy on the two-class worked case") {
        // Class 0: 1 of 1 correct; class 1: 1 of 2 correct.
        const std::vector<int> truth{0, 1, 1}, pred{0, 1, 0};
        const EvalReport r = evaluate(pred, truth, 2);
        CHECK(r.accuracy == 0.75);
        CHECK(r.confusion[1][0] == 0.5);
    }

    TEST_CASE("accuracy matches an independent recomputation") {
        Rng rng(8);
        for (int t = 0; t < 100; ++t) {
            const int classes = rng.uniform_int(2, 8);
            const int n = rng.uniform_int(1, 60);
            std::vector<int> truth(n), pred(n);
            for (int i = 0; i < n; ++i) {
                truth[i] = rng.uniform_int(0, classes - 1);
                pred[i] = rng.bernoulli(0.6) ? truth[i] : rng.uniform_int(0, classes - 1);
            }
            CHECK(std::abs(evaluate(pred, truth, classes).accuracy - oracle::mean_class_accuracy(pred, truth, classes)) <= 1e-12);
        }
    }

    TEST_CASE("empty classes are excluded and flagged") {
        const std::vector<int> truth{0, 0, 2}, pred{0, 1, 2};
        const EvalReport r = evaluate(pred, truth, 3);
        CHECK(r.empty_class[1]);
        CHECK(r.accuracy == doctest::Approx(0.75));
    }

    TEST_CASE("invalid evaluation input") {
        const std::vector<int> none;
        CHECK_THROWS_AS(evaluate(none, none, 2), Error);
        const std::vector<int> a{0, 1}, b{0};
        CHECK_THROWS_AS(evaluate(a, b, 2), Error);
        const std::vector<int> bad{3};
        CHECK_THROWS_AS(evaluate(bad, bad, 2), Error);
    }

    TEST_CASE("precision-recall sweep") {
        const std::vector<int> truth{0, 1, 1, 0}, pred{0, 1, 0, 0};
        const std::vector<double> scores{0.9, 0.4, 0.1, -0.2};
        const auto taus = tau_grid(scores);
        CHECK(taus.front() == -std::numeric_limits<double>::infinity());
        const auto curve = pr_curve(pred, scores, truth, taus);
        CHECK(curve.front().precision == 0.75);
        CHECK(curve.front().recall == 0.75);
        for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i].recall <= curve[i - 1].recall);
        CHECK(curve.back().attempted == 0);
        CHECK(curve.back().precision == 1.0);
        // Above tau = 0.1 only correct predictions remain.
        CHECK(operating_point(curve, 1.0) == 0.1);
        const std::vector<double> unsorted{1.0, 0.0};
        CHECK_THROWS_AS(pr_curve(pred, scores, truth, unsorted), Error);
    }
}

TEST_SUITE("bow") {
    TEST_CASE("histograms are normalised and uniform without descriptors") {
        BowVocabulary vocab{{std::vector<float>(kBowDescriptorLength, 0.0f), std::vector<float>(kBowDescriptorLength, 1.0f)}};
        const std::vector<std::vector<float>> descs{std::vector<float>(kBowDescriptorLength, 0.1f),
                                                    std::vector<float>(kBowDescriptorLength, 0.9f),
                                                    std::vector<float>(kBowDescriptorLength, 0.8f)};
        const auto h = bow_histogram(descs, vocab);
        CHECK(h[0] == doctest::Approx(1.0 / 3));
        CHECK(h[1] == doctest::Approx(2.0 / 3));
        const auto empty = bow_histogram(std::span<const std::vector<float>>{}, vocab);
        CHECK(empty[0] == 0.5f);
        CHECK(local_descriptors(GrayImage(64, 64, 0.5f)).empty());
    }

    TEST_CASE("baseline trains, predicts and round-trips") {
        const auto& s = fixture::Shared::get();
        std::vector<GrayImage> images;
        std::vector<int> labels;
        for (std::size_t c = 0; c < s.catalog.num_classes(); ++c)
            for (const auto& ref : s.catalog.train_images[c]) {
                images.push_back(s.catalog.load_train(ref));
                labels.push_back(static_cast<int>(c));
            }
        BowParams p;
        p.vocabulary_size = 30;
        const BowModel m = bow_baseline_train(images, labels, s.catalog.classes, p);
        CHECK(m.vocabulary.words.size() == 30);
        fixture::TempDir dir("bow");
        save_bow(dir.path() / "bow.bin", m);
        const BowModel back = load_bow(dir.path() / "bow.bin");
        CHECK(back.svm == m.svm);
        for (int i = 0; i < 3; ++i) {
            const auto a = bow_predict(m, images[i]);
            const auto b = bow_predict(back, images[i]);
            CHECK(a.label == b.label);
            CHECK(a.score == doctest::Approx(b.score).epsilon(1e-6));
        }
        p.vocabulary_size = 1'000'000;
        CHECK_THROWS_AS(bow_baseline_train(images, labels, s.catalog.classes, p), Error);
    }
}
