#include "shelf/dataset.hpp"

#include "shelf/error.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include "shelf/random.hpp"

namespace shelf {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" || ext == ".pgm" ||
           ext == ".ppm";
}

std::string trim(std::string s) {
    const auto ws = " \t\r\n";
    s.erase(0, s.find_first_not_of(ws));
    s.erase(s.find_last_not_of(ws) + 1);
    return s;
}

}  // namespace

int Catalog::class_index(const std::string& name) const {
    const auto it = std::find(classes.begin(), classes.end(), name);
    return it == classes.end() ? -1 : static_cast<int>(it - classes.begin());
}

GrayImage Catalog::load_train(const std::string& ref) const { return read_gray(path_of(ref)); }

GrayImage Catalog::load_test(const std::string& ref) const {
    return limit_height(read_gray(path_of(ref)), kMaxTestHeight);
}

bool Catalog::same_content(const Catalog& other) const {
    return classes == other.classes && train_images == other.train_images &&
           test_images == other.test_images;
}

Catalog load_catalog(const fs::path& root, bool validate_images) {
    Catalog catalog;
    catalog.root = root;
    const fs::path train_root = root / kTrainDir;
    if (!fs::is_directory(train_root))
        throw Error(ErrorCode::NotFound, "missing training directory: " + train_root.string());

    for (const auto& entry : fs::directory_iterator(train_root))
        if (entry.is_directory()) catalog.classes.push_back(entry.path().filename().string());
    std::sort(catalog.classes.begin(), catalog.classes.end());

    for (const auto& name : catalog.classes) {
        std::vector<std::string> refs;
        for (const auto& entry : fs::directory_iterator(train_root / name))
            if (entry.is_regular_file() && is_image_file(entry.path()))
                refs.push_back((fs::path(kTrainDir) / name / entry.path().filename()).generic_string());
        std::sort(refs.begin(), refs.end());
        catalog.train_images.push_back(std::move(refs));
    }

    const fs::path manifest = root / kManifestName;
    std::ifstream in(manifest);
    if (!in) throw Error(ErrorCode::NotFound, "missing test manifest: " + manifest.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (line_no == 1 && line == "relative_path,class_name") continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos)
            throw Error(ErrorCode::Format,
                        manifest.string() + ":" + std::to_string(line_no) + ": expected relative_path,class_name");
        const std::string ref = trim(line.substr(0, comma));
        const std::string cls = trim(line.substr(comma + 1));
        const int label = catalog.class_index(cls);
        if (label < 0)
            throw Error(ErrorCode::NotFound, "manifest class '" + cls + "' has no training directory");
        catalog.test_images.push_back({ref, label});
    }

    if (validate_images) {
        for (const auto& refs : catalog.train_images)
            for (const auto& ref : refs) (void)catalog.load_train(ref);
        for (const auto& t : catalog.test_images) (void)read_gray(catalog.path_of(t.ref));
    }
    return catalog;
}

void save_catalog(const Catalog& catalog, const fs::path& root) {
    for (std::size_t c = 0; c < catalog.classes.size(); ++c) {
        fs::create_directories(root / kTrainDir / catalog.classes[c]);
        for (const auto& ref : catalog.train_images[c]) {
            fs::copy_file(catalog.path_of(ref), root / ref, fs::copy_options::overwrite_existing);
        }
    }
    std::ofstream out(root / kManifestName);
    if (!out) throw Error(ErrorCode::Io, "cannot write manifest under " + root.string());
    out << "relative_path,class_name\n";
    for (const auto& t : catalog.test_images) {
        const fs::path dst = root / t.ref;
        fs::create_directories(dst.parent_path());
        fs::copy_file(catalog.path_of(t.ref), dst, fs::copy_options::overwrite_existing);
        out << t.ref << ',' << catalog.classes[t.label] << '\n';
    }
}

void validate_split(const SplitSpec& spec, std::size_t available) {
    if (spec.step < 1) throw Error(ErrorCode::InvalidArgument, "split step must be >= 1");
    if (spec.runs < 1) throw Error(ErrorCode::InvalidArgument, "split runs must be >= 1");
    if (spec.learning_size + spec.testing_size > available)
        throw Error(ErrorCode::InvalidArgument,
                    "learning_size + testing_size = " + std::to_string(spec.learning_size + spec.testing_size) +
                        " exceeds " + std::to_string(available) + " test images");
}

LearningSplit split_for_learning(std::size_t test_count, const SplitSpec& spec, std::size_t run) {
    validate_split(spec, test_count);
    if (run >= spec.runs) throw Error(ErrorCode::InvalidArgument, "run index out of range");
    std::vector<std::size_t> order(test_count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(spec.seed, run);
    rng.shuffle(order);
    LearningSplit split;
    split.learning.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.learning_size));
    split.testing.assign(order.begin() + static_cast<std::ptrdiff_t>(spec.learning_size),
                         order.begin() + static_cast<std::ptrdiff_t>(spec.learning_size + spec.testing_size));
    std::sort(split.learning.begin(), split.learning.end());
    std::sort(split.testing.begin(), split.testing.end());
    return split;
}

LearningSplit split_for_learning(const Catalog& catalog, const SplitSpec& spec, std::size_t run) {
    return split_for_learning(catalog.test_images.size(), spec, run);
}

}  // namespace shelf
