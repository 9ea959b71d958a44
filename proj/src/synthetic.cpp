#include "shelf/synthetic.hpp"

#include "shelf/error.hpp"
#include "shelf/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace shelf {

namespace fs = std::filesystem;

namespace {

enum class Shape { Box, Disk, Ring, Triangle, Cross, HBar, VBar };

struct Primitive {
    Shape shape = Shape::Box;
    double cx = 0, cy = 0;  // centre, product pixels
    double rx = 0, ry = 0;  // half extents
    float tone = 0;
};

using Motif = std::vector<Primitive>;

constexpr int kGlyphLeft = 22;
constexpr int kGlyphTop = 6;
constexpr int kGlyphRight = 76;
constexpr int kGlyphBottom = 58;
constexpr int kWordRow = 70;

bool inside(const Primitive& p, double x, double y) {
    const double u = (x - p.cx) / p.rx;
    const double v = (y - p.cy) / p.ry;
    switch (p.shape) {
        case Shape::Box: return std::abs(u) <= 1 && std::abs(v) <= 1;
        case Shape::Disk: return u * u + v * v <= 1;
        case Shape::Ring: {
            const double r = u * u + v * v;
            return r <= 1 && r >= 0.35;
        }
        case Shape::Triangle: return v >= -1 && v <= 1 && std::abs(u) <= (v + 1) / 2;
        case Shape::Cross: return (std::abs(u) <= 1 && std::abs(v) <= 0.3) || (std::abs(v) <= 1 && std::abs(u) <= 0.3);
        case Shape::HBar: return std::abs(u) <= 1 && std::abs(v) <= 0.35;
        case Shape::VBar: return std::abs(v) <= 1 && std::abs(u) <= 0.35;
    }
    return false;
}

void draw(GrayImage& img, const Primitive& p, double dx = 0, double dy = 0) {
    const int x0 = std::max(0, static_cast<int>(std::floor(p.cx + dx - p.rx)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(p.cx + dx + p.rx)));
    const int y0 = std::max(0, static_cast<int>(std::floor(p.cy + dy - p.ry)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(p.cy + dy + p.ry)));
    Primitive q = p;
    q.cx += dx;
    q.cy += dy;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (inside(q, x + 0.5, y + 0.5)) img.at(x, y) = p.tone;
}

Primitive random_primitive(Rng& rng, double left, double top, double right, double bottom, double min_r,
                           double max_r) {
    Primitive p;
    p.shape = static_cast<Shape>(rng.uniform_int(0, 6));
    p.rx = rng.uniform(min_r, max_r);
    p.ry = p.shape == Shape::Disk || p.shape == Shape::Ring ? p.rx : rng.uniform(min_r, max_r);
    p.cx = rng.uniform(left + p.rx, right - p.rx);
    p.cy = rng.uniform(top + p.ry, bottom - p.ry);
    p.tone = static_cast<float>(rng.bernoulli(0.75) ? rng.uniform(0.02, 0.3) : rng.uniform(0.96, 1.0));
    return p;
}

Motif class_motif(Rng& rng) {
    Motif m;
    for (int i = 0; i < 4; ++i)
        m.push_back(random_primitive(rng, kGlyphLeft, kGlyphTop, kGlyphRight, kGlyphBottom, 5.0, 11.0));
    return m;
}

Motif logo_motif(Rng& rng) {
    Motif m;
    Primitive frame{Shape::Box, 11, 16, 9, 10, 0.1f};
    m.push_back(frame);
    Primitive inner = random_primitive(rng, 4, 8, 18, 24, 3.0, 5.0);
    inner.tone = 0.95f;
    m.push_back(inner);
    return m;
}

struct PrintedWord {
    std::string word;
    Rect rect;
};

struct ProductSpec {
    const Motif* motif = nullptr;
    const Motif* logo = nullptr;
    std::vector<std::string> words;
    double distortion = 0.0;
    const Motif* brands = nullptr;  // marks shared by all classes, one or two per product
};

constexpr int kBrandMarks = 8;

Motif brand_pool(Rng& rng) {
    Motif m;
    for (int i = 0; i < kBrandMarks; ++i) {
        Primitive p = random_primitive(rng, 0, 0, 14, 14, 4.0, 7.0);
        p.tone = static_cast<float>(rng.uniform(0.02, 0.3));
        m.push_back(p);
    }
    return m;
}

GrayImage render_product(const ProductSpec& spec, int width, int height, Rng& rng,
                         std::vector<PrintedWord>* printed) {
    const float paper = static_cast<float>(rng.uniform(0.62, 0.9));
    GrayImage img(width, height, paper);
    // Instance-specific packaging decoration, low contrast.
    const int decorations = rng.uniform_int(1, 2);
    for (int i = 0; i < decorations; ++i) {
        Primitive p = random_primitive(rng, 2, 2, width - 2, height - 2, 4.0, 9.0);
        p.tone = static_cast<float>(std::clamp(paper + rng.uniform(-0.12, 0.12), 0.0, 1.0));
        draw(img, p);
    }
    const double jx = rng.uniform(-2.0, 2.0);
    const double jy = rng.uniform(-2.0, 2.0);
    for (std::size_t i = 0; i < spec.motif->size(); ++i) {
        Primitive p = (*spec.motif)[i];
        if (spec.distortion > 0) {
            if (i == 0 && rng.bernoulli(0.5 * spec.distortion)) continue;
            p.cx += rng.uniform(-3.0, 3.0) * spec.distortion;
            p.cy += rng.uniform(-3.0, 3.0) * spec.distortion;
            p.rx *= 1.0 + rng.uniform(-0.25, 0.25) * spec.distortion;
            p.ry *= 1.0 + rng.uniform(-0.25, 0.25) * spec.distortion;
        }
        draw(img, p, jx, jy);
    }
    if (spec.logo)
        for (const auto& p : *spec.logo) draw(img, p);
    if (spec.brands && !spec.brands->empty()) {
        // Brand marks go in the band below the printed words.
        const int marks = rng.uniform_int(1, 2);
        for (int i = 0; i < marks; ++i) {
            Primitive b = (*spec.brands)[static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<int>(spec.brands->size()) - 1))];
            b.cx = rng.uniform(b.rx + 2, width - b.rx - 2);
            b.cy = rng.uniform(kWordRow + kPrintedWordHeight + 2 + b.ry, height - 1 - b.ry);
            draw(img, b);
        }
    }

    int x = 1;
    for (const auto& word : spec.words) {
        const int w = printed_word_width(word);
        if (x + w > width) throw Error(ErrorCode::InvalidArgument, "words do not fit on product: " + word);
        print_word(img, word, x, kWordRow, 0.05f, paper);
        if (printed) printed->push_back({word, Rect{x, kWordRow, w, kPrintedWordHeight}});
        x += w + 16;
    }
    return img;
}

void paste(GrayImage& canvas, const GrayImage& item, int x0, int y0) {
    for (int y = 0; y < item.height; ++y) {
        const int cy = y0 + y;
        if (cy < 0 || cy >= canvas.height) continue;
        for (int x = 0; x < item.width; ++x) {
            const int cx = x0 + x;
            if (cx >= 0 && cx < canvas.width) canvas.at(cx, cy) = item.at(x, y);
        }
    }
}

void fill_rect(GrayImage& img, const Rect& r, float tone) {
    for (int y = std::max(0, r.y); y < std::min(img.height, r.y + r.h); ++y)
        for (int x = std::max(0, r.x); x < std::min(img.width, r.x + r.w); ++x) img.at(x, y) = tone;
}

void add_clutter(GrayImage& img, Rng& rng, int tags) {
    for (int i = 0; i < tags; ++i) {
        const int w = rng.uniform_int(18, 34);
        const int h = rng.uniform_int(10, 18);
        const Rect tag{rng.uniform_int(0, std::max(0, img.width - w)), rng.uniform_int(0, std::max(0, img.height - h)), w, h};
        fill_rect(img, tag, 0.1f);
        fill_rect(img, Rect{tag.x + 1, tag.y + 1, tag.w - 2, tag.h - 2}, static_cast<float>(rng.uniform(0.85, 1.0)));
    }
}

void degrade(GrayImage& img, Rng& rng, double shift) {
    const double contrast = 1.0 - 0.35 * shift - rng.uniform(0.0, 0.15);
    const double brightness = rng.uniform(-0.08, 0.08);
    const double tilt = rng.uniform(-0.12, 0.12);
    int radius = rng.bernoulli(0.5 + 0.5 * shift) ? 1 : 0;
    if (shift > 0.5 && rng.bernoulli(0.5)) radius = 2;
    img = box_blur(img, radius);
    const double sigma = 0.02 + 0.03 * shift;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            const double light = 1.0 + tilt * (2.0 * x / std::max(1, img.width - 1) - 1.0);
            double v = 0.5 + (img.at(x, y) - 0.5) * contrast + brightness;
            v = v * light + sigma * rng.normal();
            img.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
}

RgbImage as_rgb(const GrayImage& g) {
    RgbImage out;
    out.width = g.width;
    out.height = g.height;
    out.rgb.resize(g.values.size() * 3);
    for (std::size_t i = 0; i < g.values.size(); ++i) {
        const auto v = static_cast<std::uint8_t>(std::lround(std::clamp(g.values[i], 0.0f, 1.0f) * 255.0f));
        out.rgb[i * 3] = out.rgb[i * 3 + 1] = out.rgb[i * 3 + 2] = v;
    }
    return out;
}

std::string numbered(const std::string& stem, int i, int width) {
    std::ostringstream os;
    os << stem << std::setw(width) << std::setfill('0') << i << ".png";
    return os.str();
}

std::vector<WordPlan> default_words(const SyntheticParams& p, const std::vector<std::string>& names, Rng& rng) {
    std::vector<WordPlan> plan;
    for (int c = 0; c < p.num_classes; ++c) {
        WordPlan w{names[c], std::vector<int>(p.num_classes, 0)};
        w.per_class[c] = p.per_class;
        plan.push_back(std::move(w));
    }
    WordPlan organic{"organic", std::vector<int>(p.num_classes, 0)};
    for (int c = 0; c < p.num_classes; ++c) organic.per_class[c] = rng.uniform_int(0, p.per_class / 2);
    plan.push_back(std::move(organic));
    return plan;
}

}  // namespace

int intersection_area(const Rect& a, const Rect& b) {
    const int w = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const int h = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    return w > 0 && h > 0 ? w * h : 0;
}

int printed_word_width(const std::string& word) { return 3 * static_cast<int>(word.size()) + 1; }

void print_word(GrayImage& image, const std::string& word, int x, int y, float ink, float paper) {
    const int w = printed_word_width(word);
    for (int dy = 0; dy < kPrintedWordHeight; ++dy) {
        for (int dx = 0; dx < w; ++dx) {
            const int px = x + dx;
            const int py = y + dy;
            if (px < 0 || py < 0 || px >= image.width || py >= image.height) continue;
            const int col = dx % 3;
            const auto ch = static_cast<unsigned char>(word[std::min<std::size_t>(dx / 3, word.size() - 1)]);
            bool dark = col == 0;
            if (col == 2) dark = ((ch >> (dy % 5)) & 1u) != 0;
            if (dx == w - 1) dark = true;
            image.at(px, py) = dark ? ink : paper;
        }
    }
}

std::vector<std::string> default_class_names(int count) {
    static const std::vector<std::string> grocery = {
        "beans",   "bread",  "candy",  "cereal",   "chips",   "chocolate", "coffee", "cookies", "fish",
        "flour",   "honey",  "jam",    "juice",    "milk",    "nuts",      "oil",    "pasta",   "rice",
        "sauce",   "soup",   "spices", "sugar",    "tea",     "vinegar",   "water",  "yogurt"};
    std::vector<std::string> names;
    for (int i = 0; i < count; ++i) {
        if (count <= static_cast<int>(grocery.size())) {
            names.push_back(grocery[i]);
        } else {
            std::ostringstream os;
            os << "class" << std::setw(3) << std::setfill('0') << i;
            names.push_back(os.str());
        }
    }
    return names;
}

Catalog generate_synthetic(const SyntheticParams& p, const fs::path& out_dir) {
    if (p.num_classes < 2) throw Error(ErrorCode::InvalidArgument, "synthetic catalog needs >= 2 classes");
    if (p.per_class < 5) throw Error(ErrorCode::InvalidArgument, "synthetic catalog needs >= 5 images per class");
    if (p.min_products < 1 || p.max_products < p.min_products)
        throw Error(ErrorCode::InvalidArgument, "invalid products-per-shelf range");

    std::vector<std::string> names = p.class_names.empty() ? default_class_names(p.num_classes) : p.class_names;
    if (static_cast<int>(names.size()) != p.num_classes)
        throw Error(ErrorCode::InvalidArgument, "class_names size must equal num_classes");

    Rng design(p.seed, 1);
    std::vector<Motif> motifs;
    for (int c = 0; c < p.num_classes; ++c) motifs.push_back(class_motif(design));
    std::vector<Motif> logos;
    std::vector<int> logo_of(p.num_classes, -1);
    for (const auto& [a, b] : p.shared_logos) {
        if (a < 0 || b < 0 || a >= p.num_classes || b >= p.num_classes || a == b)
            throw Error(ErrorCode::InvalidArgument, "invalid shared logo pair");
        logos.push_back(logo_motif(design));
        logo_of[a] = logo_of[b] = static_cast<int>(logos.size()) - 1;
    }
    const std::vector<WordPlan> plan = p.words.empty() ? default_words(p, names, design) : p.words;
    const Motif brands = p.brand_marks ? brand_pool(design) : Motif{};

    std::vector<std::vector<std::vector<std::string>>> words_on(p.num_classes,
                                                                std::vector<std::vector<std::string>>(p.per_class));
    for (const auto& w : plan) {
        if (static_cast<int>(w.per_class.size()) != p.num_classes)
            throw Error(ErrorCode::InvalidArgument, "word plan for '" + w.word + "' has wrong class count");
        for (int c = 0; c < p.num_classes; ++c) {
            if (w.per_class[c] > p.per_class)
                throw Error(ErrorCode::InvalidArgument, "word plan for '" + w.word + "' exceeds per_class");
            for (int i = 0; i < w.per_class[c]; ++i) words_on[c][i].push_back(w.word);
        }
    }

    fs::create_directories(out_dir);
    nlohmann::json sidecar = nlohmann::json::object();
    for (int c = 0; c < p.num_classes; ++c) {
        const fs::path dir = out_dir / kTrainDir / names[c];
        fs::create_directories(dir);
        for (int i = 0; i < p.per_class; ++i) {
            Rng rng(p.seed, 1000 + static_cast<std::uint64_t>(c) * 100000 + i);
            ProductSpec spec{&motifs[c], logo_of[c] >= 0 ? &logos[logo_of[c]] : nullptr, words_on[c][i], 0.0, &brands};
            std::vector<PrintedWord> printed;
            const GrayImage product = render_product(spec, p.product_width, p.product_height, rng, &printed);
            // Studio shot: the product on a light backdrop at an arbitrary pixel offset.
            const int m = p.studio_margin;
            GrayImage img(product.width + 2 * m, product.height + 2 * m, static_cast<float>(rng.uniform(0.9, 1.0)));
            const int ox = rng.uniform_int(0, 2 * m);
            const int oy = rng.uniform_int(0, 2 * m);
            paste(img, product, ox, oy);
            for (float& v : img.values)
                v = static_cast<float>(std::clamp(v + p.studio_noise * rng.normal(), 0.0, 1.0));
            for (auto& pw : printed) {
                pw.rect.x += ox;
                pw.rect.y += oy;
            }
            const std::string file = numbered(names[c] + "_", i, 3);
            write_png(dir / file, img);
            nlohmann::json entries = nlohmann::json::array();
            for (const auto& pw : printed)
                entries.push_back({{"word", pw.word}, {"rect", {pw.rect.x, pw.rect.y, pw.rect.w, pw.rect.h}}});
            sidecar[(fs::path(kTrainDir) / names[c] / file).generic_string()] = entries;
        }
    }
    std::ofstream(out_dir / kWordSidecarName) << sidecar.dump(1) << '\n';

    fs::create_directories(out_dir / "test");
    std::vector<int> labels(p.shelf_images);
    for (int t = 0; t < p.shelf_images; ++t) labels[t] = t % p.num_classes;
    Rng order(p.seed, 2);
    order.shuffle(labels);

    std::ofstream manifest(out_dir / kManifestName);
    std::ofstream composition(out_dir / "composition.csv");
    manifest << "relative_path,class_name\n";
    composition << "index,products\n";
    for (int t = 0; t < p.shelf_images; ++t) {
        Rng rng(p.seed, 5000000 + static_cast<std::uint64_t>(t));
        const int label = labels[t];
        const int n = rng.uniform_int(p.min_products, p.max_products);
        const int cols = static_cast<int>(std::ceil(std::sqrt(n * 1.3)));
        const int rows = (n + cols - 1) / cols;
        const int slot_w = p.product_width + 6;
        const int slot_h = p.product_height + 10;
        GrayImage canvas(cols * slot_w + 12, rows * slot_h + 12, static_cast<float>(rng.uniform(0.35, 0.55)));
        for (int r = 0; r < rows; ++r)
            fill_rect(canvas, Rect{0, 6 + (r + 1) * slot_h - 5, canvas.width, 4}, 0.15f);
        for (int k = 0; k < n; ++k) {
            const int r = k / cols;
            const int col = k % cols;
            ProductSpec spec{&motifs[label], logo_of[label] >= 0 ? &logos[logo_of[label]] : nullptr, {names[label]},
                             p.domain_shift, &brands};
            GrayImage product = render_product(spec, p.product_width, p.product_height, rng, nullptr);
            const double s = rng.uniform(0.95, 1.0) - 0.1 * p.domain_shift;
            product = resize(product, std::max(8, static_cast<int>(std::lround(product.width * s))),
                             std::max(8, static_cast<int>(std::lround(product.height * s))));
            const int x = 6 + col * slot_w + rng.uniform_int(0, slot_w - product.width);
            const int y = 6 + r * slot_h + (slot_h - 6 - product.height) + rng.uniform_int(-2, 0);
            paste(canvas, product, x, y);
        }
        add_clutter(canvas, rng, rng.uniform_int(1, 3));
        degrade(canvas, rng, p.domain_shift);
        const std::string file = numbered("shelf_", t, 4);
        write_png(out_dir / "test" / file, as_rgb(canvas));
        manifest << "test/" << file << ',' << names[label] << '\n';
        composition << t << ',' << n << '\n';
    }
    manifest.close();
    composition.close();
    return load_catalog(out_dir, false);
}

GrayImage render_background(int width, int height, std::uint64_t seed) {
    Rng rng(seed, 77);
    GrayImage img(width, height, static_cast<float>(rng.uniform(0.35, 0.55)));
    for (int y = 100; y < height; y += 106) fill_rect(img, Rect{0, y, width, 4}, 0.15f);
    add_clutter(img, rng, rng.uniform_int(2, 5));
    degrade(img, rng, 0.0);
    return img;
}

std::vector<int> read_composition(const fs::path& dir) {
    std::ifstream in(dir / "composition.csv");
    if (!in) throw Error(ErrorCode::NotFound, "missing composition.csv in " + dir.string());
    std::vector<int> counts;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        counts.push_back(std::stoi(line.substr(comma + 1)));
    }
    return counts;
}

WordSidecar read_word_sidecar(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "missing word sidecar: " + path.string());
    const auto j = nlohmann::json::parse(in);
    WordSidecar out;
    for (const auto& [ref, entries] : j.items()) {
        auto& list = out[ref];
        for (const auto& e : entries) {
            const auto& r = e.at("rect");
            list.emplace_back(e.at("word").get<std::string>(),
                              Rect{r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>(), r.at(3).get<int>()});
        }
    }
    return out;
}

}  // namespace shelf
