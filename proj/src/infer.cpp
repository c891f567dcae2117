#include "pxlm/infer.hpp"

#include <algorithm>
#include <fstream>

#include "pxlm/utf8.hpp"

namespace pxlm {

namespace {

// bitmask of inked rows per column restricted to [col0, col0+width)
std::array<uint16_t, 8> run_rows(const Strip& strip, int col0, int width) {
    std::array<uint16_t, 8> rows{};
    for (int r = 0; r < Strip::kHeight; ++r)
        for (int c = 0; c < width; ++c)
            if (strip.at(r, col0 + c)) rows[static_cast<size_t>(r)] |= static_cast<uint16_t>(1u << c);
    return rows;
}

int popcount16(uint16_t v) { return __builtin_popcount(v); }

}  // namespace

int glyph_distance(const Strip& strip, int col0, int width, const Glyph& g) {
    const auto run = run_rows(strip, col0, width);
    int run_count = 0, glyph_count = 0;
    for (int r = 0; r < 8; ++r) {
        run_count += popcount16(run[static_cast<size_t>(r)]);
        glyph_count += popcount16(g.rows[static_cast<size_t>(r)]);
    }
    int best = INT32_MAX;
    for (int shift = -1; shift <= 1; ++shift) {
        int inter = 0;
        for (int r = 0; r < 8; ++r) {
            const uint16_t grow = g.rows[static_cast<size_t>(r)];
            // glyph pixel at column c lands on run column c + shift; columns
            // shifted outside the run never intersect but still count in |B|
            const uint16_t shifted = shift >= 0 ? static_cast<uint16_t>(grow << shift)
                                                : static_cast<uint16_t>(grow >> -shift);
            inter += popcount16(static_cast<uint16_t>(run[static_cast<size_t>(r)] & shifted));
        }
        best = std::min(best, run_count + glyph_count - 2 * inter);
    }
    return best;
}

Recognition recognize(const Strip& strip, const Atlas& atlas) {
    // per-column profile: 0 blank, 1 ink, 2 solid (all rows inked)
    std::vector<uint8_t> ink(static_cast<size_t>(strip.width), 0);
    for (int c = 0; c < strip.width; ++c) {
        int rows = 0;
        for (int r = 0; r < Strip::kHeight; ++r) rows += strip.at(r, c) ? 1 : 0;
        ink[static_cast<size_t>(c)] = rows == 0 ? 0 : (rows == Strip::kHeight ? 2 : 1);
    }

    // a stretch of >= 8 consecutive solid columns is an end marker: rendered
    // glyphs are at most 5 columns wide and separated by blank gaps, so only
    // the all-ink marker patch can paint one. It separates words, not glyphs.
    std::vector<uint8_t> sep(static_cast<size_t>(strip.width), 0);
    for (int c0 = 0; c0 < strip.width;) {
        if (ink[static_cast<size_t>(c0)] != 2) {
            ++c0;
            continue;
        }
        int e = c0;
        while (e < strip.width && ink[static_cast<size_t>(e)] == 2) ++e;
        if (e - c0 >= 8)
            for (int c = c0; c < e; ++c) sep[static_cast<size_t>(c)] = 1;
        c0 = e;
    }

    // maximal ink runs outside separators
    struct Run {
        int c0, c1;  // [c0, c1)
    };
    std::vector<Run> runs;
    int c = 0;
    while (c < strip.width) {
        if (!ink[static_cast<size_t>(c)] || sep[static_cast<size_t>(c)]) {
            ++c;
            continue;
        }
        int e = c;
        while (e < strip.width && ink[static_cast<size_t>(e)] && !sep[static_cast<size_t>(e)]) ++e;
        runs.push_back({c, e});
        c = e;
    }

    Recognition out;
    const int max_w = atlas.max_width();
    std::u32string text;
    for (size_t i = 0; i < runs.size(); ++i) {
        if (i > 0) {
            bool marker = false;
            for (int g = runs[i - 1].c1; g < runs[i].c0; ++g)
                if (sep[static_cast<size_t>(g)]) marker = true;
            const int gap = runs[i].c0 - runs[i - 1].c1;
            if (marker || gap >= atlas.space) text.push_back(U' ');
        }
        const int width = runs[i].c1 - runs[i].c0;
        if (width > max_w + 2) {
            // wider than any glyph could reach at +-1 shift: unmatchable
            text.push_back(U'?');
            out.run_distances.push_back(-1);
            continue;
        }
        char32_t best_cp = U'?';
        int best_d = INT32_MAX;
        for (const auto& [cp, glyph] : atlas.glyphs) {
            const int d = glyph_distance(strip, runs[i].c0, width, glyph);
            if (d < best_d) {  // ties keep the earlier (lowest) codepoint
                best_d = d;
                best_cp = cp;
            }
        }
        text.push_back(best_cp);
        out.run_distances.push_back(best_d);
    }
    out.text = utf8_encode(text);
    return out;
}

// ---------------------------------------------------------------------------

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open vocabulary: " + path);
    Vocabulary v;
    std::string word;
    while (std::getline(in, word)) {
        while (!word.empty() && (word.back() == '\r' || word.back() == ' ')) word.pop_back();
        if (word.empty()) continue;
        for (auto& ch : word)
            if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
        v.words.insert(word);
    }
    return v;
}

bool Vocabulary::contains(const std::string& word) const {
    std::string w = word;
    for (auto& ch : w)
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    return words.count(w) > 0;
}

std::string normalized_first_word(const std::string& text) {
    size_t i = 0;
    while (i < text.size() && text[i] == ' ') ++i;
    size_t e = i;
    while (e < text.size() && text[e] != ' ') ++e;
    std::string tok = text.substr(i, e - i);
    auto is_word_char = [](char ch) {
        return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') ||
               static_cast<unsigned char>(ch) >= 0x80;  // keep non-ASCII bytes
    };
    size_t b = 0;
    while (b < tok.size() && !is_word_char(tok[b])) ++b;
    size_t t = tok.size();
    while (t > b && !is_word_char(tok[t - 1])) --t;
    tok = tok.substr(b, t - b);
    for (auto& ch : tok)
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    return tok;
}

double readability(const std::vector<std::string>& texts, const Vocabulary& vocab) {
    if (texts.empty()) return 0.0;
    size_t hits = 0;
    for (const auto& t : texts) {
        const std::string w = normalized_first_word(t);
        if (!w.empty() && vocab.contains(w)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(texts.size());
}

bool first_word_match(const std::string& recognized, const std::string& target) {
    const std::string a = normalized_first_word(recognized);
    return !a.empty() && a == normalized_first_word(target);
}

// ---------------------------------------------------------------------------

template <class S>
std::vector<std::vector<uint8_t>> generate_patches(
    Model<S>& model, const std::vector<std::vector<uint8_t>>& prompt_patches, int steps) {
    if (steps < 1) throw UsageError("generate: steps must be positive");
    const Geometry& geo = model.cfg.geo;
    if (prompt_patches.empty()) throw DataError("generate: prompt renders to zero patches");
    for (const auto& p : prompt_patches)
        if (static_cast<int>(p.size()) != geo.patch_px())
            throw DataError("generate: prompt patch size " + std::to_string(p.size()) +
                            " does not match geometry (" + std::to_string(geo.patch_px()) + ")");
    const int total = static_cast<int>(prompt_patches.size()) + steps * geo.L;
    if (total > model.cfg.window)
        throw DataError("generate: prompt (" + std::to_string(prompt_patches.size()) +
                        " patches) + " + std::to_string(steps) + " steps of " +
                        std::to_string(geo.L) + " patches exceed window " +
                        std::to_string(model.cfg.window));

    std::vector<std::vector<uint8_t>> seq = prompt_patches;
    std::vector<std::vector<uint8_t>> generated;
    generated.reserve(static_cast<size_t>(steps) * static_cast<size_t>(geo.L));
    for (int s = 0; s < steps; ++s) {
        const int T = static_cast<int>(seq.size());
        auto x = patches_to_scalars<S>(seq);
        Tape<S> t;
        int xn = t.leaf(x.data(), T, geo.patch_px(), nullptr);
        ForwardNodes fw = model.forward(t, xn, T, /*grads_on=*/false);
        const S* last = t.values(fw.logits) + static_cast<size_t>(T - 1) * model.cfg.out_dim();
        for (auto& patch : model.decode_logits(last)) {
            seq.push_back(patch);
            generated.push_back(std::move(patch));
        }
    }
    return generated;
}

template <class S>
GenerationResult generate(Model<S>& model, const Atlas& atlas, const std::string& prompt_utf8,
                          int steps) {
    const Geometry& geo = model.cfg.geo;
    Strip prompt = with_generation_gap(atlas, render_text(atlas, utf8_decode(prompt_utf8)));

    GenerationResult res;
    res.prompt_patches = patchify(prompt, geo);
    res.generated_patches = generate_patches(model, res.prompt_patches, steps);
    res.recognized = recognize(unpatchify(res.generated_patches, geo), atlas);
    return res;
}

template std::vector<std::vector<uint8_t>> generate_patches<float>(
    Model<float>&, const std::vector<std::vector<uint8_t>>&, int);
template std::vector<std::vector<uint8_t>> generate_patches<double>(
    Model<double>&, const std::vector<std::vector<uint8_t>>&, int);
template GenerationResult generate<float>(Model<float>&, const Atlas&, const std::string&, int);
template GenerationResult generate<double>(Model<double>&, const Atlas&, const std::string&, int);

}  // namespace pxlm
