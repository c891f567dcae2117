#include <doctest.h>

#include "pxlm/infer.hpp"
#include "pxlm/rng.hpp"
#include "pxlm/utf8.hpp"

using namespace pxlm;

namespace {

const std::string kAssets = PXLM_ASSET_DIR;

Atlas the_atlas() { return Atlas::load(kAssets + "/atlas8.pxfont"); }

Model<float> tiny_model(int window) {
    ModelConfig cfg;
    cfg.n_layers = 1;
    cfg.d_model = 16;
    cfg.n_heads = 2;
    cfg.d_ff = 32;
    cfg.window = window;
    Model<float> m;
    m.build(cfg);
    Rng rng(8);
    m.init_params(rng);
    return m;
}

}  // namespace

TEST_CASE("every glyph is its own nearest template with a safety margin") {
    Atlas atlas = the_atlas();
    // render each glyph alone and match against the whole font
    for (const auto& [cp, g] : atlas.glyphs) {
        std::u32string one(1, cp);
        Strip s = render_text(atlas, one);
        CHECK(glyph_distance(s, 0, s.width, g) == 0);
        for (const auto& [cp2, g2] : atlas.glyphs) {
            if (cp2 == cp) continue;
            const int d = glyph_distance(s, 0, s.width, g2);
            CAPTURE(cp);
            CAPTURE(cp2);
            // the design margin: any two glyphs differ by at least 3 pixels
            // under the shift-tolerant metric
            CHECK(d >= 3);
        }
    }
}

TEST_CASE("recognition survives any single-pixel corruption") {
    Atlas atlas = the_atlas();
    Rng rng(606);
    std::vector<char32_t> cps;
    for (const auto& [cp, g] : atlas.glyphs) cps.push_back(cp);
    for (int trial = 0; trial < 10; ++trial) {
        const char32_t cp = cps[rng.below(cps.size())];
        Strip s = render_text(atlas, std::u32string(1, cp));
        const int r = static_cast<int>(rng.below(8));
        int c = static_cast<int>(rng.below(static_cast<uint64_t>(s.width)));
        // never blank an entire single-ink column (that would split the run);
        // flipping ON is always safe, flipping OFF only when the column keeps ink
        if (s.at(r, c)) {
            int ink_in_col = 0;
            for (int rr = 0; rr < 8; ++rr) ink_in_col += s.at(rr, c);
            if (ink_in_col == 1) {
                s.set(r, c, 1);  // leave as is; corrupt by adding elsewhere instead
                s.set((r + 1) % 8, c, 1);
            } else {
                s.set(r, c, 0);
            }
        } else {
            s.set(r, c, 1);
        }
        Recognition rec = recognize(s, atlas);
        CAPTURE(cp);
        CHECK(rec.text == utf8_encode(std::u32string(1, cp)));
        REQUIRE(rec.run_distances.size() == 1);
        CHECK(rec.run_distances[0] <= 1);
    }
}

TEST_CASE("random rendered strings recognize back to themselves exactly") {
    Atlas atlas = the_atlas();
    std::vector<char32_t> cps;
    for (const auto& [cp, g] : atlas.glyphs) cps.push_back(cp);
    Rng rng(31415);
    for (int trial = 0; trial < 200; ++trial) {
        std::u32string text;
        const int words = 1 + static_cast<int>(rng.below(5));
        for (int w = 0; w < words; ++w) {
            if (w) text.push_back(U' ');
            const int len = 1 + static_cast<int>(rng.below(6));
            for (int i = 0; i < len; ++i) text.push_back(cps[rng.below(cps.size())]);
        }
        Strip s = render_text(atlas, text);
        Recognition rec = recognize(s, atlas);
        CAPTURE(trial);
        CAPTURE(utf8_encode(text));
        REQUIRE(rec.text == utf8_encode(text));
        for (int d : rec.run_distances) CHECK(d == 0);
    }
}

TEST_CASE("runs wider than any glyph become the unknown marker") {
    Atlas atlas = the_atlas();
    Strip s(12);
    for (int c = 0; c < 12; ++c) s.set(0, c, 1);  // a 12-column solid run
    Recognition rec = recognize(s, atlas);
    CHECK(rec.text == "?");
    REQUIRE(rec.run_distances.size() == 1);
    CHECK(rec.run_distances[0] == -1);

    // blank strips recognize to nothing at all
    Strip blank(20);
    CHECK(recognize(blank, atlas).text.empty());
}

TEST_CASE("word boundaries require a full space width of blank columns") {
    Atlas atlas = the_atlas();
    Strip s = render_text(atlas, utf8_decode("ab cd"));
    CHECK(recognize(s, atlas).text == "ab cd");

    // a double space still reads as one separator
    Strip s2 = render_text(atlas, utf8_decode("ab  cd"));
    CHECK(recognize(s2, atlas).text == "ab cd");
}

TEST_CASE("the all-ink end marker reads as a word boundary") {
    Atlas atlas = the_atlas();
    const Strip ab = render_text(atlas, utf8_decode("ab"));
    const Strip cd = render_text(atlas, utf8_decode("cd"));

    // glue: text + marker + text with NO blank columns anywhere in between —
    // the marker itself must split the words
    auto glue = [&](int marker_cols, int pad_before, int pad_after) {
        Strip s(ab.width + pad_before + marker_cols + pad_after + cd.width);
        for (int r = 0; r < 8; ++r) {
            int c = 0;
            for (int i = 0; i < ab.width; ++i, ++c) s.set(r, c, ab.at(r, i));
            c += pad_before;
            for (int i = 0; i < marker_cols; ++i, ++c) s.set(r, c, 1);
            c += pad_after;
            for (int i = 0; i < cd.width; ++i, ++c) s.set(r, c, cd.at(r, i));
        }
        return s;
    };

    CHECK(recognize(glue(8, 0, 0), atlas).text == "ab cd");   // marker flush on both sides
    CHECK(recognize(glue(8, 2, 1), atlas).text == "ab cd");   // sub-space blanks around it
    CHECK(recognize(glue(16, 1, 1), atlas).text == "ab cd");  // two adjacent markers

    // trailing marker adds no token
    Strip tail(ab.width + 1 + 8);
    for (int r = 0; r < 8; ++r) {
        for (int i = 0; i < ab.width; ++i) tail.set(r, i, ab.at(r, i));
        for (int i = 0; i < 8; ++i) tail.set(r, ab.width + 1 + i, 1);
    }
    CHECK(recognize(tail, atlas).text == "ab");

    // 7 solid columns are NOT a marker: they merge with adjacent ink as usual
    Recognition seven = recognize(glue(7, 0, 0), atlas);
    CHECK(seven.text.find(' ') == std::string::npos);
}

TEST_CASE("first-word normalization and vocabulary lookup") {
    CHECK(normalized_first_word("Hello, world") == "hello");
    CHECK(normalized_first_word("  \"Dog!\" barked") == "dog");
    CHECK(normalized_first_word("...") == "");
    CHECK(normalized_first_word("") == "");
    CHECK(normalized_first_word("x") == "x");

    CHECK(first_word_match("Dog!", "dog"));
    CHECK(first_word_match("cat sat", "Cat naps"));
    CHECK(!first_word_match("dog", "cat"));
    CHECK(!first_word_match("", "dog"));

    Vocabulary vocab = Vocabulary::load(kAssets + "/words.txt");
    REQUIRE(vocab.words.size() > 100);
    CHECK(vocab.contains("the"));
    CHECK(vocab.contains("The"));
    CHECK(!vocab.contains("zzxqy"));

    const double r = readability({"the end", "zzxqy blah", "Cat."}, vocab);
    CHECK(r == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("generation appends exactly steps * L patches") {
    Atlas atlas = the_atlas();
    auto m = tiny_model(32);
    const int L = m.cfg.geo.L;

    GenerationResult res = generate(m, atlas, "ab", 3);
    CHECK(res.generated_patches.size() == static_cast<size_t>(3 * L));
    for (const auto& p : res.generated_patches) CHECK(p.size() == 64u);

    // prompt patches are the rendered prompt plus the trailing gap
    Strip prompt = with_generation_gap(atlas, render_text(atlas, utf8_decode("ab")));
    CHECK(res.prompt_patches == patchify(prompt, m.cfg.geo));

    // determinism: same model, same prompt, same pixels
    GenerationResult res2 = generate(m, atlas, "ab", 3);
    CHECK(res2.generated_patches == res.generated_patches);
    CHECK(res2.recognized.text == res.recognized.text);
}

TEST_CASE("generation rejects impossible requests before any compute") {
    Atlas atlas = the_atlas();
    auto m = tiny_model(8);
    CHECK_THROWS_AS(generate(m, atlas, "ab", 0), UsageError);
    CHECK_THROWS_AS(generate(m, atlas, "ab", -2), UsageError);
    // 2 prompt patches + 4*2 generated > window of 8
    CHECK_THROWS_AS(generate(m, atlas, "ab", 4), DataError);
    // an unknown character fails at render time
    CHECK_THROWS_AS(generate(m, atlas, "a\xE4\xB8\x96", 1), DataError);
}
