#pragma once

#include "shelf/patchmine.hpp"

#include <filesystem>
#include <iosfwd>

namespace shelf {

inline constexpr std::uint32_t kBankVersion = 1;

/// Layout (little-endian): "SHDB", u32 version, u32 class count L,
/// u32 cell descriptor length, L x u32 detectors per class, then per detector
/// u32 class_id, u32 window_w, u32 window_h, f32 bias, f32 fire_threshold,
/// window_w * window_h * cell length f32 weights.
void write_bank(std::ostream& out, const DetectorBank& bank);
DetectorBank read_bank(std::istream& in);

void save_bank(const std::filesystem::path& path, const DetectorBank& bank);
DetectorBank load_bank(const std::filesystem::path& path);

}  // namespace shelf
