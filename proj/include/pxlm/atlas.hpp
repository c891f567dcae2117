#pragma once

#include <array>
#include <map>
#include <string>

#include "pxlm/common.hpp"

namespace pxlm {

// One glyph of the fixed-height bitmap font. Rows are stored as bitmasks,
// bit c = column c (so width is capped at 8, which the loader enforces).
struct Glyph {
    int width = 0;
    std::array<uint8_t, 8> rows{};

    bool pixel(int r, int c) const { return (rows[static_cast<size_t>(r)] >> c) & 1; }
};

// Bitmap font atlas in the line-oriented text format:
//   PXFONT 1 height=8 gap=1 space=3
//   glyph U+0041 width=4
//   <height rows of '.'/'#', each `width` long>
// Glyph order in the file is irrelevant; lookups are by codepoint.
struct Atlas {
    int height = 8;
    int gap = 1;    // blank columns between adjacent glyphs
    int space = 3;  // blank columns a space character inserts (suppresses gap)
    std::map<char32_t, Glyph> glyphs;

    static Atlas load(const std::string& path);

    const Glyph* find(char32_t cp) const {
        auto it = glyphs.find(cp);
        return it == glyphs.end() ? nullptr : &it->second;
    }

    int max_width() const {
        int w = 0;
        for (const auto& [cp, g] : glyphs) w = std::max(w, g.width);
        return w;
    }
};

}  // namespace pxlm
