#pragma once

// Little-endian primitives shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "oga/error.hpp"

namespace oga::binary {

inline void write_u64(std::ostream& out, std::uint64_t v) {
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(bytes, 8);
}

inline void write_f32(std::ostream& out, float f) {
    const auto v = std::bit_cast<std::uint32_t>(f);
    char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(bytes, 4);
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& in, char* dst, std::size_t n, const std::string& what) {
    in.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw FormatError(what + ": file truncated");
}

inline std::uint64_t read_u64(std::istream& in, const std::string& what) {
    unsigned char bytes[8];
    read_exact(in, reinterpret_cast<char*>(bytes), 8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
    return v;
}

inline float decode_f32(const unsigned char* bytes) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[i];
    return std::bit_cast<float>(v);
}

inline float read_f32(std::istream& in, const std::string& what) {
    unsigned char bytes[4];
    read_exact(in, reinterpret_cast<char*>(bytes), 4, what);
    return decode_f32(bytes);
}

inline std::string read_string(std::istream& in, const std::string& what,
                               std::uint64_t max_len = 1u << 30) {
    const auto len = read_u64(in, what);
    if (len > max_len) throw FormatError(what + ": implausible string length");
    std::string s(len, '\0');
    read_exact(in, s.data(), len, what);
    return s;
}

} // namespace oga::binary
