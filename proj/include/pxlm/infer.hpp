#pragma once

#include <set>
#include <string>
#include <vector>

#include "pxlm/atlas.hpp"
#include "pxlm/model.hpp"
#include "pxlm/render.hpp"

namespace pxlm {

// ---------------------------------------------------------------------------
// recognition: pixels back to text by template matching
// ---------------------------------------------------------------------------

// Distance between a pixel run and a glyph: the size of the symmetric
// difference of their pixel sets, minimized over horizontal shifts of -1, 0,
// +1 columns. No clipping: shifted-out pixels still count as mismatches.
// This is the same metric the font's design margin (> 2 between any two
// glyphs) is stated in, so flipping any single pixel can never change the
// winning glyph.
int glyph_distance(const Strip& strip, int col0, int width, const Glyph& g);

struct Recognition {
    std::string text;                 // UTF-8
    std::vector<int> run_distances;   // best distance per recognized glyph run
};

// Segments a strip into glyph runs (separated by >= 1 blank column) and
// words (separated by >= atlas.space blank columns), then matches each run
// against every glyph. Ties pick the lowest codepoint. A run wider than
// max_glyph_width + 2 cannot be any glyph and becomes '?'. A stretch of 8+
// consecutive fully-inked columns is the rendering domain's end marker; it
// reads as a word boundary, not as ink (no rendered glyph sequence can
// produce one: glyphs are at most 5 wide and always separated by a blank).
Recognition recognize(const Strip& strip, const Atlas& atlas);

// ---------------------------------------------------------------------------
// readability scoring
// ---------------------------------------------------------------------------

struct Vocabulary {
    std::set<std::string> words;  // lowercase

    static Vocabulary load(const std::string& path);
    bool contains(const std::string& word) const;  // case-insensitive
};

// First whitespace-separated token with leading/trailing ASCII punctuation
// stripped and ASCII-lowercased; empty when there is none.
std::string normalized_first_word(const std::string& text);

// Fraction of texts whose normalized first word is a vocabulary word.
double readability(const std::vector<std::string>& texts, const Vocabulary& vocab);

// Case-insensitive, punctuation-stripped comparison of first words.
bool first_word_match(const std::string& recognized, const std::string& target);

// ---------------------------------------------------------------------------
// generation
// ---------------------------------------------------------------------------

struct GenerationResult {
    std::vector<std::vector<uint8_t>> prompt_patches;     // incl. the trailing gap
    std::vector<std::vector<uint8_t>> generated_patches;  // exactly steps * L
    Recognition recognized;                               // of the generated strip
};

// Patch-level generation core: runs `steps` forward passes from a raw patch
// prompt. Each pass re-runs the full context — no key/value reuse — takes
// the last position's logits, and appends the L decoded patches, so exactly
// steps * L patches are returned (the prompt is not included); an all-ones
// end marker does not stop generation early. Throws DataError before any
// compute if prompt length + steps * L exceeds the model window.
template <class S>
std::vector<std::vector<uint8_t>> generate_patches(
    Model<S>& model, const std::vector<std::vector<uint8_t>>& prompt_patches, int steps);

// Renders the prompt, appends the generation gap, patchifies, and calls
// generate_patches; the generated strip is then recognized back to text.
template <class S>
GenerationResult generate(Model<S>& model, const Atlas& atlas, const std::string& prompt_utf8,
                          int steps);

// ---------------------------------------------------------------------------

extern template std::vector<std::vector<uint8_t>> generate_patches<float>(
    Model<float>&, const std::vector<std::vector<uint8_t>>&, int);
extern template std::vector<std::vector<uint8_t>> generate_patches<double>(
    Model<double>&, const std::vector<std::vector<uint8_t>>&, int);
extern template GenerationResult generate<float>(Model<float>&, const Atlas&, const std::string&, int);
extern template GenerationResult generate<double>(Model<double>&, const Atlas&, const std::string&, int);

}  // namespace pxlm
