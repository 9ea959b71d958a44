#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace shelf {

struct KMeansResult {
    std::vector<std::vector<float>> centroids;
    std::vector<int> assignment;  // per point, index into centroids
    int iterations = 0;
};

/// Lloyd's k-means with k-means++ seeding; deterministic given `seed`.
/// Points are rows of equal length. Clusters that become empty are removed
/// and assignments renumbered. Throws if k < 1 or k > points.size().
KMeansResult kmeans(std::span<const std::vector<float>> points, int k, std::uint64_t seed, int max_iterations = 100);

double squared_distance(std::span<const float> a, std::span<const float> b);

}  // namespace shelf
