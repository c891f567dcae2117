#include "pxlm/atlas.hpp"

#include <fstream>
#include <sstream>

namespace pxlm {

namespace {

[[noreturn]] void bad(const std::string& path, int line_no, const std::string& why) {
    throw DataError(path + ":" + std::to_string(line_no) + ": " + why);
}

int parse_kv_int(const std::string& tok, const std::string& key, const std::string& path, int line_no) {
    const std::string prefix = key + "=";
    if (tok.rfind(prefix, 0) != 0) bad(path, line_no, "expected " + prefix + "<int>, got '" + tok + "'");
    try {
        return std::stoi(tok.substr(prefix.size()));
    } catch (const std::exception&) {
        bad(path, line_no, "bad integer in '" + tok + "'");
    }
}

}  // namespace

Atlas Atlas::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open atlas file: " + path);

    Atlas atlas;
    std::string line;
    int line_no = 0;

    if (!std::getline(in, line)) bad(path, 1, "empty atlas file");
    ++line_no;
    {
        std::istringstream hs(line);
        std::string magic, version, h, g, s;
        hs >> magic >> version >> h >> g >> s;
        if (magic != "PXFONT" || version != "1") bad(path, line_no, "expected 'PXFONT 1' header");
        atlas.height = parse_kv_int(h, "height", path, line_no);
        atlas.gap = parse_kv_int(g, "gap", path, line_no);
        atlas.space = parse_kv_int(s, "space", path, line_no);
        if (atlas.height != 8) bad(path, line_no, "only height=8 atlases are supported");
        if (atlas.gap < 0 || atlas.space < 0) bad(path, line_no, "negative gap or space");
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string kw, cp_tok, w_tok;
        ls >> kw >> cp_tok >> w_tok;
        if (kw != "glyph") bad(path, line_no, "expected 'glyph U+XXXX width=N', got '" + line + "'");
        if (cp_tok.rfind("U+", 0) != 0) bad(path, line_no, "codepoint must start with U+");
        char32_t cp;
        try {
            cp = static_cast<char32_t>(std::stoul(cp_tok.substr(2), nullptr, 16));
        } catch (const std::exception&) {
            bad(path, line_no, "bad codepoint '" + cp_tok + "'");
        }
        Glyph glyph;
        glyph.width = parse_kv_int(w_tok, "width", path, line_no);
        if (glyph.width < 1 || glyph.width > 8) bad(path, line_no, "glyph width must be 1..8");

        for (int r = 0; r < atlas.height; ++r) {
            if (!std::getline(in, line)) bad(path, line_no, "glyph truncated: missing pixel rows");
            ++line_no;
            if (static_cast<int>(line.size()) != glyph.width)
                bad(path, line_no, "pixel row length != glyph width");
            for (int c = 0; c < glyph.width; ++c) {
                if (line[static_cast<size_t>(c)] == '#')
                    glyph.rows[static_cast<size_t>(r)] |= static_cast<uint8_t>(1u << c);
                else if (line[static_cast<size_t>(c)] != '.')
                    bad(path, line_no, "pixel rows may only contain '.' and '#'");
            }
        }
        if (!atlas.glyphs.emplace(cp, glyph).second) bad(path, line_no, "duplicate glyph " + cp_tok);
    }
    if (atlas.glyphs.empty()) throw DataError(path + ": atlas defines no glyphs");
    return atlas;
}

}  // namespace pxlm
