#pragma once

#include <string>
#include <string_view>

#include "pxlm/common.hpp"

namespace pxlm {

// Strict UTF-8 decode: rejects overlongs, surrogates, and values > U+10FFFF,
// reporting the byte offset of the offending sequence.
inline std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    size_t i = 0;
    auto fail = [&](size_t at) {
        throw DataError("invalid UTF-8 at byte " + std::to_string(at));
    };
    while (i < s.size()) {
        const unsigned char c0 = static_cast<unsigned char>(s[i]);
        uint32_t cp;
        size_t len;
        if (c0 < 0x80) {
            cp = c0;
            len = 1;
        } else if ((c0 & 0xe0) == 0xc0) {
            cp = c0 & 0x1f;
            len = 2;
        } else if ((c0 & 0xf0) == 0xe0) {
            cp = c0 & 0x0f;
            len = 3;
        } else if ((c0 & 0xf8) == 0xf0) {
            cp = c0 & 0x07;
            len = 4;
        } else {
            fail(i);
            return out;  // unreachable
        }
        if (i + len > s.size()) fail(i);
        for (size_t k = 1; k < len; ++k) {
            const unsigned char ck = static_cast<unsigned char>(s[i + k]);
            if ((ck & 0xc0) != 0x80) fail(i);
            cp = (cp << 6) | (ck & 0x3f);
        }
        static constexpr uint32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
        if (cp < kMin[len] || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) fail(i);
        out.push_back(static_cast<char32_t>(cp));
        i += len;
    }
    return out;
}

inline void utf8_append(std::string& out, char32_t cp) {
    const uint32_t c = static_cast<uint32_t>(cp);
    if (c < 0x80) {
        out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (c >> 6)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
    } else if (c < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (c >> 12)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (c >> 18)));
        out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
    }
}

inline std::string utf8_encode(const std::u32string& s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t cp : s) utf8_append(out, cp);
    return out;
}

inline bool is_ascii_letter(char32_t c) {
    return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
}

}  // namespace pxlm
