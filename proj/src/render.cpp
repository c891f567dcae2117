#include "pxlm/render.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pxlm/utf8.hpp"

namespace pxlm {

namespace {

[[noreturn]] void no_glyph(char32_t cp, size_t offset) {
    std::string shown;
    utf8_append(shown, cp);
    std::ostringstream ss;
    ss << "no glyph for character '" << shown << "' (U+" << std::hex << std::uppercase
       << static_cast<uint32_t>(cp) << std::dec << ") at offset " << offset;
    throw DataError(ss.str());
}

}  // namespace

int rendered_width(const Atlas& atlas, const std::u32string& text) {
    int width = 0;
    bool pending_gap = false;  // a gap is owed before the next glyph
    for (size_t i = 0; i < text.size(); ++i) {
        const char32_t cp = text[i];
        if (cp == U' ') {
            width += atlas.space;
            pending_gap = false;
            continue;
        }
        const Glyph* g = atlas.find(cp);
        if (!g) no_glyph(cp, i);
        if (pending_gap) width += atlas.gap;
        width += g->width;
        pending_gap = true;
    }
    return width;
}

Strip render_text(const Atlas& atlas, const std::u32string& text) {
    Strip out(rendered_width(atlas, text));
    int x = 0;
    bool pending_gap = false;
    for (size_t i = 0; i < text.size(); ++i) {
        const char32_t cp = text[i];
        if (cp == U' ') {
            x += atlas.space;
            pending_gap = false;
            continue;
        }
        const Glyph* g = atlas.find(cp);
        if (!g) no_glyph(cp, i);
        if (pending_gap) x += atlas.gap;
        for (int r = 0; r < Strip::kHeight; ++r)
            for (int c = 0; c < g->width; ++c)
                if (g->pixel(r, c)) out.set(r, x + c, 1);
        x += g->width;
        pending_gap = true;
    }
    return out;
}

Strip with_generation_gap(const Atlas& atlas, Strip s) {
    Strip out(s.width + atlas.space);
    for (int r = 0; r < Strip::kHeight; ++r)
        for (int c = 0; c < s.width; ++c) out.set(r, c, s.at(r, c));
    return out;
}

std::vector<std::vector<uint8_t>> patchify(const Strip& s, const Geometry& geo) {
    if (geo.H != Strip::kHeight) throw DataError("patch geometry height must be 8");
    const int n = (s.width + geo.W - 1) / geo.W;
    std::vector<std::vector<uint8_t>> patches(static_cast<size_t>(n),
                                              std::vector<uint8_t>(static_cast<size_t>(geo.patch_px()), 0));
    for (int r = 0; r < geo.H; ++r)
        for (int c = 0; c < s.width; ++c) {
            if (!s.at(r, c)) continue;
            const int p = c / geo.W, w = c % geo.W;
            for (int ch = 0; ch < geo.C; ++ch)
                patches[static_cast<size_t>(p)][static_cast<size_t>((r * geo.W + w) * geo.C + ch)] = 1;
        }
    return patches;
}

std::vector<uint8_t> eos_patch(const Geometry& geo) {
    return std::vector<uint8_t>(static_cast<size_t>(geo.patch_px()), 1);
}

Strip unpatchify(const std::vector<std::vector<uint8_t>>& patches, const Geometry& geo) {
    Strip out(static_cast<int>(patches.size()) * geo.W);
    for (size_t p = 0; p < patches.size(); ++p)
        for (int r = 0; r < geo.H; ++r)
            for (int w = 0; w < geo.W; ++w)
                out.set(r, static_cast<int>(p) * geo.W + w,
                        patches[p][static_cast<size_t>((r * geo.W + w) * geo.C)]);
    return out;
}

AttackTable AttackTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open attack table: " + path);
    AttackTable table;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string letter, arrow, list;
        ls >> letter >> arrow >> list;
        if (letter.size() != 1 || !is_ascii_letter(static_cast<char32_t>(letter[0])) || arrow != "->" || list.empty())
            throw DataError(path + ":" + std::to_string(line_no) + ": expected '<letter> -> U+XXXX,...'");
        std::u32string opts;
        std::istringstream cs(list);
        std::string tok;
        while (std::getline(cs, tok, ',')) {
            if (tok.rfind("U+", 0) != 0)
                throw DataError(path + ":" + std::to_string(line_no) + ": bad codepoint '" + tok + "'");
            opts.push_back(static_cast<char32_t>(std::stoul(tok.substr(2), nullptr, 16)));
        }
        if (!table.options.emplace(static_cast<char32_t>(letter[0]), opts).second)
            throw DataError(path + ":" + std::to_string(line_no) + ": duplicate entry for '" + letter + "'");
    }
    return table;
}

std::u32string apply_visual_attack(const std::u32string& text, const AttackTable& table,
                                   double ratio, Rng& rng) {
    if (ratio < 0.0 || ratio > 1.0) throw UsageError("attack ratio must be in [0,1]");
    size_t letter_count = 0;
    std::vector<size_t> eligible;  // positions that have replacement options
    for (size_t i = 0; i < text.size(); ++i) {
        if (!is_ascii_letter(text[i])) continue;
        ++letter_count;
        if (table.options.count(text[i])) eligible.push_back(i);
    }
    // round half up on the count of ALL ASCII letters, capped by eligibility
    size_t k = static_cast<size_t>(std::floor(ratio * static_cast<double>(letter_count) + 0.5));
    k = std::min(k, eligible.size());
    if (k == 0) return text;  // ratio 0 never touches the RNG

    std::u32string out = text;
    for (size_t idx : rng.sample_indices(eligible.size(), k)) {
        const size_t pos = eligible[idx];
        const std::u32string& opts = table.options.at(out[pos]);
        out[pos] = opts[rng.below(opts.size())];
    }
    return out;
}

}  // namespace pxlm
