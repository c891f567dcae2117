#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace pxlm {

// Error categories map 1:1 onto the CLI exit codes (usage=1, data=2, numeric=3).
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// little-endian binary scalar IO (file formats are pinned little-endian)
// ---------------------------------------------------------------------------

inline void write_bytes(std::ostream& os, const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& is, void* p, size_t n, const char* what) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(is.gcount()) != n)
        throw DataError(std::string("truncated read: ") + what);
}

template <class T>
void write_le(std::ostream& os, T v) {
    static_assert(std::is_integral_v<T>);
    unsigned char b[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>((static_cast<uint64_t>(v) >> (8 * i)) & 0xff);
    write_bytes(os, b, sizeof(T));
}

template <class T>
T read_le(std::istream& is, const char* what) {
    static_assert(std::is_integral_v<T>);
    unsigned char b[sizeof(T)];
    read_bytes(is, b, sizeof(T), what);
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return static_cast<T>(v);
}

inline void write_f32(std::ostream& os, float v) {
    static_assert(sizeof(float) == 4);
    uint32_t bits;
    __builtin_memcpy(&bits, &v, 4);
    write_le<uint32_t>(os, bits);
}

inline float read_f32(std::istream& is, const char* what) {
    uint32_t bits = read_le<uint32_t>(is, what);
    float v;
    __builtin_memcpy(&v, &bits, 4);
    return v;
}

inline void write_str(std::ostream& os, const std::string& s) {
    write_le<uint32_t>(os, static_cast<uint32_t>(s.size()));
    write_bytes(os, s.data(), s.size());
}

inline std::string read_str(std::istream& is, const char* what) {
    uint32_t n = read_le<uint32_t>(is, what);
    std::string s(n, '\0');
    if (n) read_bytes(is, s.data(), n, what);
    return s;
}

}  // namespace pxlm
