#include "shelf/image.hpp"

#include "shelf/error.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>

namespace shelf {

namespace {

cv::Mat as_mat(const GrayImage& image) {
    cv::Mat m(image.height, image.width, CV_32F);
    std::copy(image.values.begin(), image.values.end(), m.ptr<float>(0));
    return m;
}

GrayImage from_mat(const cv::Mat& m) {
    cv::Mat f;
    m.convertTo(f, CV_32F);
    GrayImage out(f.cols, f.rows);
    for (int y = 0; y < f.rows; ++y) {
        const float* row = f.ptr<float>(y);
        std::copy(row, row + f.cols, out.values.begin() + static_cast<std::ptrdiff_t>(y) * f.cols);
    }
    return out;
}

GrayImage gray_from_decoded(const cv::Mat& decoded, const std::string& what) {
    if (decoded.empty()) throw Error(ErrorCode::Format, "cannot decode image: " + what);
    cv::Mat eight;
    if (decoded.depth() == CV_16U)
        decoded.convertTo(eight, CV_8U, 1.0 / 257.0);
    else
        eight = decoded;
    if (eight.channels() == 1) {
        GrayImage out(eight.cols, eight.rows);
        for (int y = 0; y < eight.rows; ++y) {
            const auto* row = eight.ptr<std::uint8_t>(y);
            for (int x = 0; x < eight.cols; ++x) out.at(x, y) = row[x] / 255.0f;
        }
        return out;
    }
    RgbImage rgb;
    rgb.width = eight.cols;
    rgb.height = eight.rows;
    rgb.rgb.resize(static_cast<std::size_t>(rgb.width) * rgb.height * 3);
    const int ch = eight.channels();
    for (int y = 0; y < eight.rows; ++y) {
        const auto* row = eight.ptr<std::uint8_t>(y);
        for (int x = 0; x < eight.cols; ++x) {
            auto* px = &rgb.rgb[(static_cast<std::size_t>(y) * rgb.width + x) * 3];
            px[0] = row[x * ch + 2];
            px[1] = row[x * ch + 1];
            px[2] = row[x * ch + 0];
        }
    }
    return to_grayscale(rgb);
}

}  // namespace

GrayImage::GrayImage(int w, int h, float fill)
    : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

GrayImage to_grayscale(const RgbImage& image) {
    GrayImage out(image.width, image.height);
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const auto* px = &image.rgb[i * 3];
        out.values[i] = static_cast<float>((0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2]) / 255.0);
    }
    return out;
}

NormalizedImage zscore_normalize(const GrayImage& image) {
    NormalizedImage out{image.width, image.height, std::vector<double>(image.values.size(), 0.0), false};
    const auto n = static_cast<double>(image.values.size());
    if (image.values.empty()) {
        out.degenerate = true;
        return out;
    }
    double mean = 0.0;
    for (float v : image.values) mean += v;
    mean /= n;
    double var = 0.0;
    for (float v : image.values) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / n);
    if (!(sd > 0.0)) {
        out.degenerate = true;
        return out;
    }
    for (std::size_t i = 0; i < image.values.size(); ++i) out.values[i] = (image.values[i] - mean) / sd;
    return out;
}

GrayImage resize(const GrayImage& image, int width, int height) {
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "resize to empty image");
    if (width == image.width && height == image.height) return image;
    const bool shrink = width <= image.width && height <= image.height;
    cv::Mat out;
    cv::resize(as_mat(image), out, cv::Size(width, height), 0, 0,
               shrink ? cv::INTER_AREA : cv::INTER_LINEAR);
    return from_mat(out);
}

std::vector<GrayImage> build_pyramid(const GrayImage& image, int levels, double factor, int min_side) {
    if (levels < 1) throw Error(ErrorCode::InvalidArgument, "pyramid needs at least one level");
    if (!(factor > 0.0 && factor < 1.0))
        throw Error(ErrorCode::InvalidArgument, "pyramid factor must lie in (0, 1)");
    std::vector<GrayImage> pyramid;
    pyramid.push_back(image);
    for (int i = 1; i < levels; ++i) {
        const double s = std::pow(factor, i);
        const int w = static_cast<int>(std::lround(image.width * s));
        const int h = static_cast<int>(std::lround(image.height * s));
        if (w < min_side || h < min_side) break;
        pyramid.push_back(resize(image, w, h));
    }
    return pyramid;
}

GrayImage limit_height(const GrayImage& image, int max_height) {
    if (image.height <= max_height) return image;
    const double s = static_cast<double>(max_height) / image.height;
    const int w = std::max(1, static_cast<int>(std::lround(image.width * s)));
    return resize(image, w, max_height);
}

GrayImage box_blur(const GrayImage& image, int radius) {
    if (radius <= 0) return image;
    cv::Mat out;
    cv::blur(as_mat(image), out, cv::Size(2 * radius + 1, 2 * radius + 1), cv::Point(-1, -1),
             cv::BORDER_REFLECT);
    return from_mat(out);
}

RgbImage read_rgb(const std::filesystem::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (m.empty()) throw Error(ErrorCode::Format, "cannot decode image: " + path.string());
    RgbImage out;
    out.width = m.cols;
    out.height = m.rows;
    out.rgb.resize(static_cast<std::size_t>(m.cols) * m.rows * 3);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) {
            auto* px = &out.rgb[(static_cast<std::size_t>(y) * m.cols + x) * 3];
            px[0] = row[x * 3 + 2];
            px[1] = row[x * 3 + 1];
            px[2] = row[x * 3 + 0];
        }
    }
    return out;
}

GrayImage read_gray(const std::filesystem::path& path) {
    return gray_from_decoded(cv::imread(path.string(), cv::IMREAD_UNCHANGED), path.string());
}

GrayImage decode_gray(std::span<const std::uint8_t> bytes) {
    cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8U, const_cast<std::uint8_t*>(bytes.data()));
    return gray_from_decoded(cv::imdecode(buf, cv::IMREAD_UNCHANGED), "upload");
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
    cv::Mat m(image.height, image.width, CV_8U);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            m.at<std::uint8_t>(y, x) =
                static_cast<std::uint8_t>(std::lround(std::clamp(image.at(x, y), 0.0f, 1.0f) * 255.0f));
    if (!cv::imwrite(path.string(), m)) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
    cv::Mat m(image.height, image.width, CV_8UC3);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x) {
            const auto* px = &image.rgb[(static_cast<std::size_t>(y) * image.width + x) * 3];
            m.at<cv::Vec3b>(y, x) = cv::Vec3b(px[2], px[1], px[0]);
        }
    if (!cv::imwrite(path.string(), m)) throw Error(ErrorCode::Io, "cannot write " + path.string());
}

}  // namespace shelf
