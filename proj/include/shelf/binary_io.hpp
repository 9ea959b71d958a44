#pragma once

#include "shelf/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace shelf::binio {

// Little-endian primitives for the versioned artifact formats.

inline void put_u32(std::ostream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

inline void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

inline void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void put_floats(std::ostream& out, const std::vector<float>& v) {
    for (float f : v) put_f32(out, f);
}

inline std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error(ErrorCode::Format, "truncated artifact");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline float get_f32(std::istream& in) { return std::bit_cast<float>(get_u32(in)); }

inline std::string get_string(std::istream& in, std::uint32_t max_len = 1u << 20) {
    const std::uint32_t n = get_u32(in);
    if (n > max_len) throw Error(ErrorCode::Format, "string field too long");
    std::string s(n, '\0');
    if (n && !in.read(s.data(), n)) throw Error(ErrorCode::Format, "truncated artifact");
    return s;
}

inline std::vector<float> get_floats(std::istream& in, std::size_t n) {
    std::vector<float> v(n);
    for (auto& f : v) f = get_f32(in);
    return v;
}

inline void expect_magic(std::istream& in, const char (&magic)[5]) {
    char b[4];
    if (!in.read(b, 4) || std::memcmp(b, magic, 4) != 0)
        throw Error(ErrorCode::Format, std::string("bad magic, expected ") + magic);
}

}  // namespace shelf::binio
