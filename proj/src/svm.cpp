#include "shelf/svm.hpp"

#include "shelf/binary_io.hpp"
#include "shelf/error.hpp"
#include "shelf/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace shelf {

namespace {

constexpr double kTau = 1e-12;

double kernel_value(Kernel kernel, double gamma, std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    if (kernel == Kernel::Linear) {
        for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
        return s;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        s += d * d;
    }
    return std::exp(-gamma * s);
}

}  // namespace

std::string kernel_name(Kernel kernel) { return kernel == Kernel::Linear ? "linear" : "rbf"; }

Kernel parse_kernel(const std::string& name) {
    if (name == "linear") return Kernel::Linear;
    if (name == "rbf") return Kernel::Rbf;
    throw Error(ErrorCode::InvalidArgument, "unknown kernel: " + name);
}

double dual_objective(std::span<const double> kernel, std::span<const int> labels, std::span<const double> alpha) {
    const std::size_t n = labels.size();
    double quad = 0.0;
    double lin = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        lin += alpha[i];
        if (alpha[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j)
            quad += alpha[i] * alpha[j] * labels[i] * labels[j] * kernel[i * n + j];
    }
    return 0.5 * quad - lin;
}

BinarySolution solve_binary(std::span<const double> kernel, std::span<const int> labels, double c, double tolerance,
                            long max_iterations) {
    const std::size_t n = labels.size();
    if (kernel.size() != n * n) throw Error(ErrorCode::InvalidArgument, "kernel matrix size mismatch");
    BinarySolution sol;
    sol.alpha.assign(n, 0.0);
    std::vector<double> grad(n, -1.0);
    auto& alpha = sol.alpha;
    auto y = [&](std::size_t i) { return static_cast<double>(labels[i]); };
    auto q = [&](std::size_t i, std::size_t j) { return y(i) * y(j) * kernel[i * n + j]; };
    auto upper = [&](std::size_t i) { return alpha[i] >= c; };
    auto lower = [&](std::size_t i) { return alpha[i] <= 0.0; };

    long iter = 0;
    while (iter < max_iterations) {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmax2 = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t i_sel = -1;
        for (std::size_t t = 0; t < n; ++t) {
            if (labels[t] == 1) {
                if (!upper(t) && -grad[t] >= gmax) {
                    gmax = -grad[t];
                    i_sel = static_cast<std::ptrdiff_t>(t);
                }
            } else if (!lower(t) && grad[t] >= gmax) {
                gmax = grad[t];
                i_sel = static_cast<std::ptrdiff_t>(t);
            }
        }
        std::ptrdiff_t j_sel = -1;
        double best = std::numeric_limits<double>::infinity();
        if (i_sel >= 0) {
            const auto i = static_cast<std::size_t>(i_sel);
            const double qii = kernel[i * n + i];
            for (std::size_t t = 0; t < n; ++t) {
                if (labels[t] == 1) {
                    if (lower(t)) continue;
                    const double diff = gmax + grad[t];
                    gmax2 = std::max(gmax2, grad[t]);
                    if (diff > 0) {
                        double quad = qii + kernel[t * n + t] - 2.0 * y(i) * q(i, t);
                        if (quad <= 0) quad = kTau;
                        const double obj = -(diff * diff) / quad;
                        if (obj <= best) {
                            best = obj;
                            j_sel = static_cast<std::ptrdiff_t>(t);
                        }
                    }
                } else {
                    if (upper(t)) continue;
                    const double diff = gmax - grad[t];
                    gmax2 = std::max(gmax2, -grad[t]);
                    if (diff > 0) {
                        double quad = qii + kernel[t * n + t] + 2.0 * y(i) * q(i, t);
                        if (quad <= 0) quad = kTau;
                        const double obj = -(diff * diff) / quad;
                        if (obj <= best) {
                            best = obj;
                            j_sel = static_cast<std::ptrdiff_t>(t);
                        }
                    }
                }
            }
        }
        if (i_sel < 0 || j_sel < 0 || gmax + gmax2 < tolerance) break;
        ++iter;

        const auto i = static_cast<std::size_t>(i_sel);
        const auto j = static_cast<std::size_t>(j_sel);
        const double old_i = alpha[i];
        const double old_j = alpha[j];
        const double qij = q(i, j);
        const double qii = kernel[i * n + i];
        const double qjj = kernel[j * n + j];
        if (labels[i] != labels[j]) {
            double quad = qii + qjj + 2.0 * qij;
            if (quad <= 0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) {
                    alpha[j] = 0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = -diff;
            }
            if (diff > 0) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if (alpha[j] > c) {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            double quad = qii + qjj - 2.0 * qij;
            if (quad <= 0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if (alpha[j] < 0) {
                alpha[j] = 0;
                alpha[i] = sum;
            }
            if (sum > c) {
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if (alpha[i] < 0) {
                alpha[i] = 0;
                alpha[j] = sum;
            }
        }
        const double di = alpha[i] - old_i;
        const double dj = alpha[j] - old_j;
        for (std::size_t t = 0; t < n; ++t) grad[t] += q(i, t) * di + q(j, t) * dj;
    }
    sol.iterations = iter;

    // Offset from free support vectors, or the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    int free_count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y(t) * grad[t];
        if (upper(t)) {
            if (labels[t] == -1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (lower(t)) {
            if (labels[t] == 1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++free_count;
            sum_free += yg;
        }
    }
    const double rho = free_count > 0 ? sum_free / free_count : (ub + lb) / 2.0;
    sol.bias = -rho;
    return sol;
}

std::vector<double> SvmModel::decision_values(std::span<const float> features) const {
    if (features.size() != dimension())
        throw Error(ErrorCode::InvalidArgument, "feature length " + std::to_string(features.size()) +
                                                    " does not match model dimension " + std::to_string(dimension()));
    std::vector<float> z(features.size());
    for (std::size_t d = 0; d < z.size(); ++d) z[d] = (features[d] - mean[d]) * scale[d];
    std::vector<double> kvals;
    if (kernel == Kernel::Rbf) {
        kvals.resize(support_vectors.size());
        for (std::size_t s = 0; s < support_vectors.size(); ++s) kvals[s] = kernel_value(kernel, gamma, support_vectors[s], z);
    }
    std::vector<double> out(functions.size());
    for (std::size_t c = 0; c < functions.size(); ++c) {
        const auto& f = functions[c];
        double v = f.bias;
        if (kernel == Kernel::Linear) {
            for (std::size_t d = 0; d < z.size(); ++d) v += static_cast<double>(f.weights[d]) * z[d];
        } else {
            for (std::size_t k = 0; k < f.support.size(); ++k) v += static_cast<double>(f.coef[k]) * kvals[f.support[k]];
        }
        out[c] = v;
    }
    return out;
}

SvmModel train_ovr(std::span<const FeatureVector> features, std::span<const int> labels,
                   const std::vector<std::string>& classes, const SvmParams& params) {
    const std::size_t n = features.size();
    const std::size_t num_classes = classes.size();
    if (n != labels.size()) throw Error(ErrorCode::InvalidArgument, "features and labels differ in length");
    if (num_classes < 2) throw Error(ErrorCode::InvalidArgument, "one-vs-rest training needs >= 2 classes");
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "no training samples");
    const std::size_t dim = features[0].values.size();
    for (const auto& f : features)
        if (f.values.size() != dim || f.mode != features[0].mode)
            throw Error(ErrorCode::InvalidArgument, "training features differ in length or mode");
    std::vector<std::size_t> per_class(num_classes, 0);
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= num_classes)
            throw Error(ErrorCode::InvalidArgument, "label " + std::to_string(l) + " out of range");
        ++per_class[static_cast<std::size_t>(l)];
    }
    for (std::size_t c = 0; c < num_classes; ++c)
        if (per_class[c] == 0) throw Error(ErrorCode::InvalidArgument, "class '" + classes[c] + "' has no training samples");

    SvmModel model;
    model.kernel = params.kernel;
    model.c = static_cast<float>(params.c);
    model.gamma = static_cast<float>(params.gamma_per_dimension ? params.gamma / static_cast<double>(dim) : params.gamma);
    model.standardized = params.standardize;
    model.mode = features[0].mode;
    model.classes = classes;
    model.mean.assign(dim, 0.0f);
    model.scale.assign(dim, 1.0f);
    if (params.standardize) {
        for (std::size_t d = 0; d < dim; ++d) {
            double m = 0.0;
            for (const auto& f : features) m += f.values[d];
            m /= static_cast<double>(n);
            double v = 0.0;
            for (const auto& f : features) v += (f.values[d] - m) * (f.values[d] - m);
            const double sd = std::sqrt(v / static_cast<double>(n));
            model.mean[d] = static_cast<float>(m);
            model.scale[d] = sd > 1e-12 ? static_cast<float>(1.0 / sd) : 1.0f;
        }
    }
    std::vector<std::vector<float>> z(n, std::vector<float>(dim));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dim; ++d) z[i][d] = (features[i].values[d] - model.mean[d]) * model.scale[d];

    std::vector<double> kernel(n * n);
    parallel_for(n, params.workers, [&](std::size_t i) {
        for (std::size_t j = 0; j < n; ++j) kernel[i * n + j] = kernel_value(params.kernel, model.gamma, z[i], z[j]);
    });

    std::vector<BinarySolution> solutions(num_classes);
    parallel_for(num_classes, params.workers, [&](std::size_t c) {
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = labels[i] == static_cast<int>(c) ? 1 : -1;
        solutions[c] = solve_binary(kernel, y, model.c, params.tolerance, params.max_iterations);
    });

    // Pool every sample that is a support vector of any function.
    std::vector<std::int64_t> pool_index(n, -1);
    for (std::size_t i = 0; i < n; ++i)
        for (const auto& s : solutions)
            if (s.alpha[i] > 0.0) {
                pool_index[i] = static_cast<std::int64_t>(model.support_vectors.size());
                model.support_vectors.push_back(z[i]);
                break;
            }
    for (std::size_t c = 0; c < num_classes; ++c) {
        DecisionFunction f;
        f.bias = static_cast<float>(solutions[c].bias);
        std::vector<double> w(params.kernel == Kernel::Linear ? dim : 0, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double a = solutions[c].alpha[i];
            if (a <= 0.0) continue;
            const double coef = a * (labels[i] == static_cast<int>(c) ? 1.0 : -1.0);
            if (params.kernel == Kernel::Linear) {
                for (std::size_t d = 0; d < dim; ++d) w[d] += coef * z[i][d];
            } else {
                f.support.push_back(static_cast<std::uint32_t>(pool_index[i]));
                f.coef.push_back(static_cast<float>(coef));
            }
        }
        for (double v : w) f.weights.push_back(static_cast<float>(v));
        model.functions.push_back(std::move(f));
    }
    if (params.kernel == Kernel::Linear) model.support_vectors.clear();
    return model;
}

Prediction predict_values(std::span<const double> values) {
    Prediction p;
    p.label = 0;
    p.score = values.empty() ? -std::numeric_limits<double>::infinity() : values[0];
    for (std::size_t c = 1; c < values.size(); ++c)
        if (values[c] > p.score) {
            p.score = values[c];
            p.label = static_cast<int>(c);
        }
    return p;
}

Prediction predict(const SvmModel& model, const FeatureVector& feature) {
    if (feature.mode != model.mode) throw Error(ErrorCode::InvalidArgument, "feature mode does not match the model");
    return predict_values(model.decision_values(feature.values));
}

SvmParams params_of(const SvmModel& model, const SvmParams& solver) {
    SvmParams p = solver;
    p.kernel = model.kernel;
    p.c = model.c;
    p.gamma = model.gamma;
    p.gamma_per_dimension = false;
    p.standardize = model.standardized;
    return p;
}

std::optional<int> predict_thresholded(const SvmModel& model, const FeatureVector& feature, double tau) {
    const Prediction p = predict(model, feature);
    if (p.score > tau) return p.label;
    return std::nullopt;
}

void write_model(std::ostream& out, const SvmModel& m) {
    out.write("SHSV", 4);
    binio::put_u32(out, kModelVersion);
    binio::put_u32(out, m.kernel == Kernel::Linear ? 0u : 1u);
    binio::put_u32(out, m.mode == FeatureMode::Pyramid ? 1u : 0u);
    binio::put_u32(out, m.standardized ? 1u : 0u);
    binio::put_f32(out, m.c);
    binio::put_f32(out, m.gamma);
    binio::put_u32(out, static_cast<std::uint32_t>(m.classes.size()));
    for (const auto& name : m.classes) binio::put_string(out, name);
    binio::put_u32(out, static_cast<std::uint32_t>(m.dimension()));
    binio::put_floats(out, m.mean);
    binio::put_floats(out, m.scale);
    binio::put_u32(out, static_cast<std::uint32_t>(m.support_vectors.size()));
    for (const auto& sv : m.support_vectors) binio::put_floats(out, sv);
    for (const auto& f : m.functions) {
        binio::put_f32(out, f.bias);
        binio::put_u32(out, static_cast<std::uint32_t>(f.support.size()));
        for (std::size_t k = 0; k < f.support.size(); ++k) {
            binio::put_u32(out, f.support[k]);
            binio::put_f32(out, f.coef[k]);
        }
        binio::put_u32(out, static_cast<std::uint32_t>(f.weights.size()));
        binio::put_floats(out, f.weights);
    }
}

SvmModel read_model(std::istream& in) {
    binio::expect_magic(in, "SHSV");
    const auto version = binio::get_u32(in);
    if (version != kModelVersion) throw Error(ErrorCode::Format, "unsupported model version " + std::to_string(version));
    SvmModel m;
    m.kernel = binio::get_u32(in) == 0 ? Kernel::Linear : Kernel::Rbf;
    m.mode = binio::get_u32(in) == 1 ? FeatureMode::Pyramid : FeatureMode::Whole;
    m.standardized = binio::get_u32(in) == 1;
    m.c = binio::get_f32(in);
    m.gamma = binio::get_f32(in);
    const auto num_classes = binio::get_u32(in);
    if (num_classes > 100000) throw Error(ErrorCode::Format, "implausible class count");
    for (std::uint32_t c = 0; c < num_classes; ++c) m.classes.push_back(binio::get_string(in));
    const auto dim = binio::get_u32(in);
    if (dim > 10'000'000) throw Error(ErrorCode::Format, "implausible model dimension");
    m.mean = binio::get_floats(in, dim);
    m.scale = binio::get_floats(in, dim);
    const auto sv_count = binio::get_u32(in);
    for (std::uint32_t s = 0; s < sv_count; ++s) m.support_vectors.push_back(binio::get_floats(in, dim));
    for (std::uint32_t c = 0; c < num_classes; ++c) {
        DecisionFunction f;
        f.bias = binio::get_f32(in);
        const auto count = binio::get_u32(in);
        for (std::uint32_t k = 0; k < count; ++k) {
            const auto idx = binio::get_u32(in);
            if (idx >= sv_count) throw Error(ErrorCode::Format, "support index out of range");
            f.support.push_back(idx);
            f.coef.push_back(binio::get_f32(in));
        }
        const auto wlen = binio::get_u32(in);
        if (wlen != 0 && wlen != dim) throw Error(ErrorCode::Format, "weight vector length mismatch");
        f.weights = binio::get_floats(in, wlen);
        m.functions.push_back(std::move(f));
    }
    return m;
}

void save_model(const std::filesystem::path& path, const SvmModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    write_model(out, model);
}

SvmModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
    return read_model(in);
}

}  // namespace shelf
