#pragma once

// Little-endian helpers for the LGPE/LGPZ dump containers.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lgp::binio {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    char b[4];
    for (int k = 0; k < 4; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
    os.write(b, 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((v >> (8 * k)) & 0xFF);
    os.write(b, 8);
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline std::uint64_t get_bytes(std::istream& is, int count) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), count)) throw std::runtime_error("binio: truncated input");
    std::uint64_t v = 0;
    for (int k = count - 1; k >= 0; --k) v = (v << 8) | b[k];
    return v;
}

inline std::uint32_t get_u32(std::istream& is) { return static_cast<std::uint32_t>(get_bytes(is, 4)); }
inline std::uint64_t get_u64(std::istream& is) { return get_bytes(is, 8); }
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

inline void put_magic(std::ostream& os, std::string_view magic) { os.write(magic.data(), 4); }

inline void expect_magic(std::istream& is, std::string_view magic) {
    char b[4];
    if (!is.read(b, 4) || std::string_view(b, 4) != magic) {
        throw std::runtime_error("binio: bad magic, expected " + std::string(magic));
    }
}

}  // namespace lgp::binio
