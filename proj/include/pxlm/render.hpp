#pragma once

#include <map>
#include <string>
#include <vector>

#include "pxlm/atlas.hpp"
#include "pxlm/rng.hpp"

namespace pxlm {

// A binary pixel strip: 8 rows tall, arbitrary width, row-major, 1 = ink.
struct Strip {
    static constexpr int kHeight = 8;
    int width = 0;
    std::vector<uint8_t> px;  // kHeight * width entries, [r * width + c]

    explicit Strip(int w = 0) : width(w), px(static_cast<size_t>(kHeight) * w, 0) {}

    uint8_t at(int r, int c) const { return px[static_cast<size_t>(r) * width + c]; }
    void set(int r, int c, uint8_t v) { px[static_cast<size_t>(r) * width + c] = v; }
};

// Patch geometry. Height and width are pinned to 8; channels and the number
// of patches predicted per forward position are configurable.
struct Geometry {
    int H = 8, W = 8, C = 1, L = 2;
    int patch_px() const { return H * W * C; }
};

// A text sample as a sequence of patches (each patch_px() bytes of 0/1,
// layout [(row * W + col) * C + channel]).
struct PatchSeq {
    std::vector<std::vector<uint8_t>> patches;
    std::string source_text;  // UTF-8; informational

    int T() const { return static_cast<int>(patches.size()); }
};

// Renders text as one strip. Letters are spaced `gap` blank columns apart;
// a space inserts `space` blank columns and suppresses the surrounding gaps.
// A character without a glyph raises DataError naming it and its codepoint
// offset in the string.
Strip render_text(const Atlas& atlas, const std::u32string& text);

// Total column count render_text would produce (same arithmetic, no pixels).
int rendered_width(const Atlas& atlas, const std::u32string& text);

// Appends `space` blank columns: the gap between a prompt and the first
// generated patch, so prompts end on a word boundary the model has seen.
Strip with_generation_gap(const Atlas& atlas, Strip s);

// Cuts a strip into ceil(width/W) patches, zero-padding the final partial
// patch on the right. C>1 replicates the binary value across channels.
std::vector<std::vector<uint8_t>> patchify(const Strip& s, const Geometry& geo);

// The end-of-sequence marker: a patch with every value set to 1.
std::vector<uint8_t> eos_patch(const Geometry& geo);

// Reassembles patches into a strip (channel 0 only; inverse of patchify up
// to the right padding of the last patch).
Strip unpatchify(const std::vector<std::vector<uint8_t>>& patches, const Geometry& geo);

// Homoglyph substitution table: ASCII letter -> candidate replacements.
// Text format, one entry per line:  A -> U+039B,U+0041
struct AttackTable {
    std::map<char32_t, std::u32string> options;

    static AttackTable load(const std::string& path);
};

// Replaces round(ratio * count_of_ascii_letters) letters (round half up),
// positions drawn uniformly without replacement, replacement drawn uniformly
// per position. Letters without a table entry are never selected.
std::u32string apply_visual_attack(const std::u32string& text, const AttackTable& table,
                                   double ratio, Rng& rng);

}  // namespace pxlm
