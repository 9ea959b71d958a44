#include "shelf/bank_io.hpp"

#include "shelf/binary_io.hpp"

#include <fstream>

namespace shelf {

void write_bank(std::ostream& out, const DetectorBank& bank) {
    out.write("SHDB", 4);
    binio::put_u32(out, kBankVersion);
    binio::put_u32(out, static_cast<std::uint32_t>(bank.num_classes()));
    binio::put_u32(out, kHogCellLength);
    for (const auto& cls : bank.classes) binio::put_u32(out, static_cast<std::uint32_t>(cls.size()));
    for (const auto& cls : bank.classes)
        for (const auto& d : cls) {
            binio::put_u32(out, static_cast<std::uint32_t>(d.class_id));
            binio::put_u32(out, static_cast<std::uint32_t>(d.window_w));
            binio::put_u32(out, static_cast<std::uint32_t>(d.window_h));
            binio::put_f32(out, d.bias);
            binio::put_f32(out, d.fire_threshold);
            binio::put_floats(out, d.weights);
        }
}

DetectorBank read_bank(std::istream& in) {
    binio::expect_magic(in, "SHDB");
    const auto version = binio::get_u32(in);
    if (version != kBankVersion) throw Error(ErrorCode::Format, "unsupported detector bank version " + std::to_string(version));
    const auto num_classes = binio::get_u32(in);
    const auto cell_len = binio::get_u32(in);
    if (cell_len != kHogCellLength) throw Error(ErrorCode::Format, "detector bank cell length mismatch");
    if (num_classes > 100000) throw Error(ErrorCode::Format, "implausible class count");
    std::vector<std::uint32_t> counts(num_classes);
    for (auto& c : counts) c = binio::get_u32(in);
    DetectorBank bank;
    bank.classes.resize(num_classes);
    for (std::uint32_t c = 0; c < num_classes; ++c)
        for (std::uint32_t k = 0; k < counts[c]; ++k) {
            PatchDetector d;
            d.class_id = static_cast<int>(binio::get_u32(in));
            if (d.class_id != static_cast<int>(c)) throw Error(ErrorCode::Format, "detector filed under the wrong class");
            d.window_w = static_cast<int>(binio::get_u32(in));
            d.window_h = static_cast<int>(binio::get_u32(in));
            if (d.window_w < 1 || d.window_h < 1 || d.window_w > 256 || d.window_h > 256)
                throw Error(ErrorCode::Format, "implausible detector window");
            d.bias = binio::get_f32(in);
            d.fire_threshold = binio::get_f32(in);
            d.weights = binio::get_floats(in, static_cast<std::size_t>(d.window_w) * d.window_h * cell_len);
            bank.classes[c].push_back(std::move(d));
        }
    return bank;
}

void save_bank(const std::filesystem::path& path, const DetectorBank& bank) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    write_bank(out, bank);
}

DetectorBank load_bank(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path.string());
    return read_bank(in);
}

}  // namespace shelf
