#include "shelf/kmeans.hpp"

#include "shelf/error.hpp"
#include "shelf/random.hpp"

#include <limits>

namespace shelf {

double squared_distance(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        s += d * d;
    }
    return s;
}

KMeansResult kmeans(std::span<const std::vector<float>> points, int k, std::uint64_t seed, int max_iterations) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k-means needs k >= 1");
    if (static_cast<std::size_t>(k) > points.size())
        throw Error(ErrorCode::InvalidArgument, "k-means k exceeds the number of points");
    const std::size_t n = points.size();
    const std::size_t dim = points[0].size();
    for (const auto& p : points)
        if (p.size() != dim) throw Error(ErrorCode::InvalidArgument, "k-means points differ in length");

    Rng rng(seed, 0x6b6d);
    KMeansResult result;
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::size_t first = static_cast<std::size_t>(rng.next() % n);
    result.centroids.push_back(points[first]);
    while (result.centroids.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(points[i], result.centroids.back()));
            total += nearest[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double target = rng.uniform() * total;
            for (pick = 0; pick + 1 < n; ++pick) {
                target -= nearest[pick];
                if (target < 0.0) break;
            }
        } else {
            pick = static_cast<std::size_t>(rng.next() % n);
        }
        result.centroids.push_back(points[pick]);
    }

    result.assignment.assign(n, -1);
    for (int it = 0; it < max_iterations; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < result.centroids.size(); ++c) {
                const double d = squared_distance(points[i], result.centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(c);
                }
            }
            if (result.assignment[i] != best) {
                result.assignment[i] = best;
                changed = true;
            }
        }
        result.iterations = it + 1;
        std::vector<std::vector<double>> sums(result.centroids.size(), std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(result.centroids.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& s = sums[result.assignment[i]];
            for (std::size_t d = 0; d < dim; ++d) s[d] += points[i][d];
            ++counts[result.assignment[i]];
        }
        for (std::size_t c = 0; c < result.centroids.size(); ++c) {
            if (counts[c] == 0) continue;
            for (std::size_t d = 0; d < dim; ++d)
                result.centroids[c][d] = static_cast<float>(sums[c][d] / static_cast<double>(counts[c]));
        }
        if (!changed) break;
    }

    // Drop empty clusters.
    std::vector<int> remap(result.centroids.size(), -1);
    std::vector<std::size_t> counts(result.centroids.size(), 0);
    for (int a : result.assignment) ++counts[a];
    std::vector<std::vector<float>> kept;
    for (std::size_t c = 0; c < result.centroids.size(); ++c)
        if (counts[c] > 0) {
            remap[c] = static_cast<int>(kept.size());
            kept.push_back(std::move(result.centroids[c]));
        }
    result.centroids = std::move(kept);
    for (int& a : result.assignment) a = remap[a];
    return result;
}

}  // namespace shelf
