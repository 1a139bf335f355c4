#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "hemix/errors.hpp"

// Little-endian stream helpers shared by the dataset and checkpoint formats.
namespace hemix::bin {

template <typename T>
void write_le(std::ostream& os, T v) {
    unsigned char buf[sizeof(T)];
    uint64_t u;
    if constexpr (sizeof(T) == 8) {
        std::memcpy(&u, &v, 8);
    } else {
        u = static_cast<uint64_t>(v);
    }
    for (size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((u >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    is.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (!is) throw InputError("unexpected end of file");
    uint64_t u = 0;
    for (size_t i = 0; i < sizeof(T); ++i) u |= static_cast<uint64_t>(buf[i]) << (8 * i);
    if constexpr (sizeof(T) == 8 && !std::is_integral_v<T>) {
        T v;
        std::memcpy(&v, &u, 8);
        return v;
    } else {
        return static_cast<T>(u);
    }
}

inline void write_f64(std::ostream& os, double v) {
    uint64_t u;
    std::memcpy(&u, &v, 8);
    write_le<uint64_t>(os, u);
}

inline double read_f64(std::istream& is) {
    const uint64_t u = read_le<uint64_t>(is);
    double v;
    std::memcpy(&v, &u, 8);
    return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_le<uint32_t>(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
    const uint32_t n = read_le<uint32_t>(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw InputError("unexpected end of file");
    return s;
}

}  // namespace hemix::bin
