#include "shelf/linear_svm.hpp"

#include "shelf/error.hpp"
#include "shelf/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace shelf {

double LinearSvm::score(std::span<const float> x) const {
    double s = bias;
    for (std::size_t i = 0; i < x.size(); ++i) s += static_cast<double>(weights[i]) * x[i];
    return s;
}

LinearSvm train_linear_svm(std::span<const std::vector<float>> positives,
                           std::span<const std::vector<float>> negatives, const LinearSvmOptions& options) {
    if (positives.size() < 2 || negatives.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "linear SVM needs >= 2 positives and >= 2 negatives");
    const std::size_t dim = positives[0].size();
    for (const auto& v : positives)
        if (v.size() != dim) throw Error(ErrorCode::InvalidArgument, "descriptor length mismatch");
    for (const auto& v : negatives)
        if (v.size() != dim) throw Error(ErrorCode::InvalidArgument, "descriptor length mismatch");

    const bool degenerate = std::all_of(positives.begin(), positives.end(), [&](const auto& p) {
        return std::find(negatives.begin(), negatives.end(), p) != negatives.end();
    });
    if (degenerate) throw Error(ErrorCode::Degenerate, "positives are indistinguishable from negatives");

    const std::size_t n = positives.size() + negatives.size();
    auto row = [&](std::size_t i) -> const std::vector<float>& {
        return i < positives.size() ? positives[i] : negatives[i - positives.size()];
    };
    auto label = [&](std::size_t i) { return i < positives.size() ? 1.0 : -1.0; };
    auto upper = [&](std::size_t i) {
        return i < positives.size() ? options.c * options.positive_weight : options.c;
    };

    std::vector<double> w(dim + 1, 0.0);  // last entry is the bias
    std::vector<double> alpha(n, 0.0);
    std::vector<double> qii(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 1.0;
        for (float v : row(i)) s += static_cast<double>(v) * v;
        qii[i] = s;
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(options.seed, 0x5f3);

    LinearSvm out;
    for (int epoch = 0; epoch < options.max_epochs; ++epoch) {
        rng.shuffle(order);
        double pg_max = -std::numeric_limits<double>::infinity();
        double pg_min = std::numeric_limits<double>::infinity();
        for (std::size_t i : order) {
            const auto& x = row(i);
            const double y = label(i);
            double wx = w[dim];
            for (std::size_t d = 0; d < dim; ++d) wx += w[d] * x[d];
            const double g = y * wx - 1.0;
            const double u = upper(i);
            double pg = g;
            if (alpha[i] == 0.0)
                pg = std::min(g, 0.0);
            else if (alpha[i] == u)
                pg = std::max(g, 0.0);
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);
            if (pg == 0.0) continue;
            const double old = alpha[i];
            alpha[i] = std::clamp(old - g / qii[i], 0.0, u);
            const double delta = (alpha[i] - old) * y;
            if (delta == 0.0) continue;
            for (std::size_t d = 0; d < dim; ++d) w[d] += delta * x[d];
            w[dim] += delta;
        }
        out.epochs = epoch + 1;
        if (pg_max - pg_min < options.tolerance) break;
    }
    out.weights.resize(dim);
    for (std::size_t d = 0; d < dim; ++d) out.weights[d] = static_cast<float>(w[d]);
    out.bias = static_cast<float>(w[dim]);
    return out;
}

}  // namespace shelf
