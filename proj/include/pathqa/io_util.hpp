#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "pathqa/errors.hpp"

namespace pathqa::io {

// Fixed little-endian primitives for the binary checkpoint formats.

inline void write_u8(std::ostream& out, std::uint8_t v) {
    out.put(static_cast<char>(v));
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

inline void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}

inline void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::uint8_t read_u8(std::istream& in) {
    int c = in.get();
    if (c == EOF) throw IoError("unexpected end of stream");
    return static_cast<std::uint8_t>(c);
}

inline std::uint32_t read_u32(std::istream& in) {
    char b[4];
    if (!in.read(b, 4)) throw IoError("unexpected end of stream");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

inline std::uint64_t read_u64(std::istream& in) {
    char b[8];
    if (!in.read(b, 8)) throw IoError("unexpected end of stream");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

inline double read_f64(std::istream& in) {
    std::uint64_t bits = read_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline std::string read_string(std::istream& in) {
    std::uint32_t n = read_u32(in);
    std::string s(n, '\0');
    if (n > 0 && !in.read(s.data(), n)) throw IoError("unexpected end of stream");
    return s;
}

inline void expect_magic(std::istream& in, const char (&magic)[5], const char* what) {
    char b[4];
    if (!in.read(b, 4) || std::memcmp(b, magic, 4) != 0)
        throw IoError(std::string("bad magic header, not a ") + what + " file");
}

// FNV-1a over a byte stream; used for output checksums in run manifests.
std::uint64_t fnv1a_file(const std::string& path);
std::string fnv1a_hex(std::uint64_t h);

}  // namespace pathqa::io
