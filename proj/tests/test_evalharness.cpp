#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "pxlm/evalharness.hpp"
#include "pxlm/image_io.hpp"
#include "pxlm/rng.hpp"
#include "pxlm/utf8.hpp"

using namespace pxlm;

namespace {

const std::string kAssets = PXLM_ASSET_DIR;

Atlas the_atlas() { return Atlas::load(kAssets + "/atlas8.pxfont"); }

Model<float> tiny_model(int window, int layers = 2) {
    ModelConfig cfg;
    cfg.n_layers = layers;
    cfg.d_model = 16;
    cfg.n_heads = 2;
    cfg.d_ff = 32;
    cfg.window = window;
    Model<float> m;
    m.build(cfg);
    Rng rng(12);
    m.init_params(rng);
    return m;
}

std::string write_temp(const std::string& name, const std::string& content) {
    const std::string path = "/tmp/" + name;
    std::ofstream f(path, std::ios::trunc);
    f << content;
    return path;
}

// Deterministic word built from a two-character alphabet.
std::string charset_word(Rng& rng, char a, char b) {
    std::string s;
    const int len = 3 + static_cast<int>(rng.below(3));
    for (int i = 0; i < len; ++i) s.push_back(rng.below(2) ? a : b);
    return s;
}

}  // namespace

TEST_CASE("task files parse their tab-separated columns strictly") {
    auto p = write_temp("pxlm_gen_task.tsv", "the quick\tfox\nan empty\tanswer\r\n\nlast\tone\n");
    auto items = load_gen_task(p);
    REQUIRE(items.size() == 3);
    CHECK(items[0].context == "the quick");
    CHECK(items[0].target == "fox");
    CHECK(items[1].target == "answer");  // CR stripped
    CHECK(items[2].context == "last");

    auto bad3 = write_temp("pxlm_gen_bad.tsv", "a\tb\tc\n");
    CHECK_THROWS_AS(load_gen_task(bad3), DataError);
    auto bad1 = write_temp("pxlm_gen_bad1.tsv", "no tabs here\n");
    CHECK_THROWS_AS(load_gen_task(bad1), DataError);

    auto c = write_temp("pxlm_cls_task.tsv", "single text\t1\npair a\tpair b\t0\n");
    auto cls = load_cls_task(c);
    REQUIRE(cls.size() == 2);
    CHECK(cls[0].text_a == "single text");
    CHECK(cls[0].text_b.empty());
    CHECK(cls[0].label == 1);
    CHECK(cls[1].text_b == "pair b");
    CHECK(cls[1].label == 0);

    auto badlbl = write_temp("pxlm_cls_bad.tsv", "text\tnotanumber\n");
    CHECK_THROWS_AS(load_cls_task(badlbl), DataError);
}

TEST_CASE("generative evaluation counts every item as evaluated or skipped") {
    Atlas atlas = the_atlas();
    auto model = tiny_model(12);
    Vocabulary vocab = Vocabulary::load(kAssets + "/words.txt");

    // short contexts fit; the long one cannot leave room for generation
    std::vector<GenTaskItem> items = {
        {"ab", "cd"},
        {"xy", "zw"},
        {"this context is far far too long for a twelve patch window", "no"},
    };
    GenEvalResult r = eval_lastword(model, atlas, items, vocab);
    CHECK(r.evaluated == 2);
    CHECK(r.skipped == 1);
    CHECK(r.recognized.size() == r.evaluated);
    CHECK(r.accuracy >= 0.0);
    CHECK(r.accuracy <= 1.0);
    CHECK(r.readability >= 0.0);
    CHECK(r.readability <= 1.0);
}

TEST_CASE("few-shot prompts prepend demonstrations") {
    Atlas atlas = the_atlas();
    Vocabulary vocab = Vocabulary::load(kAssets + "/words.txt");
    std::vector<GenTaskItem> items = {{"aa", "x"}, {"bb", "y"}, {"cc", "z"}};

    // a roomy window evaluates all items after the demonstrations
    auto big = tiny_model(64);
    GenEvalResult r = eval_fewshot(big, atlas, items, 1, vocab);
    CHECK(r.evaluated + r.skipped == 2);

    // the demonstration makes the composite prompt overflow a window that the
    // bare context would fit, proving the prompt really carries the demos
    auto small = tiny_model(10);
    GenEvalResult bare = eval_lastword(small, atlas, {{"cc", "z"}}, vocab);
    CHECK(bare.evaluated == 1);
    GenEvalResult shot = eval_fewshot(small, atlas,
                                      {{"a very long demonstration context", "tgt"}, {"cc", "z"}},
                                      1, vocab);
    CHECK(shot.evaluated == 0);
    CHECK(shot.skipped == 1);

    CHECK_THROWS_AS(eval_fewshot(big, atlas, items, 3, vocab), UsageError);
    CHECK_THROWS_AS(eval_fewshot(big, atlas, items, -1, vocab), UsageError);
}

TEST_CASE("a linear probe separates visually distinct classes on frozen features") {
    Atlas atlas = the_atlas();
    auto model = tiny_model(32);

    // class 0: sparse-ink glyphs, class 1: dense-ink glyphs — separable by
    // bulk pixel statistics even through a random frozen backbone
    Rng gen(2025);
    std::vector<ClsItem> train, val;
    for (int i = 0; i < 25; ++i) {
        ClsItem s{charset_word(gen, 'i', 'l') + " " + charset_word(gen, 'l', 'i'), "", 0};
        ClsItem d{charset_word(gen, 'M', 'W') + " " + charset_word(gen, 'W', 'M'), "", 1};
        if (i < 15) {
            train.push_back(s);
            train.push_back(d);
        } else {
            val.push_back(s);
            val.push_back(d);
        }
    }
    REQUIRE(val.size() == 20);

    FinetuneResult res = finetune_classifier(model, atlas, train, val, 2, 200, 0.05, 42);
    CAPTURE(res.epochs_ran);
    CHECK(res.val_accuracy >= 0.95);

    // control: shuffled training labels carry no signal, so the same probe
    // cannot approach the separable run's accuracy
    std::vector<ClsItem> shuffled = train;
    Rng rng(777);
    for (auto& it : shuffled) it.label = static_cast<int>(rng.below(2));
    FinetuneResult ctrl = finetune_classifier(model, atlas, shuffled, val, 2, 200, 0.05, 42);
    CAPTURE(ctrl.val_accuracy);
    CHECK(ctrl.val_accuracy <= 0.85);
    CHECK(ctrl.val_accuracy < res.val_accuracy);
}

TEST_CASE("classifier input validation") {
    Atlas atlas = the_atlas();
    auto model = tiny_model(32);
    std::vector<ClsItem> ok = {{"ab", "", 0}, {"cd", "", 1}};
    CHECK_THROWS_AS(finetune_classifier(model, atlas, ok, ok, 1, 5, 0.1, 1), UsageError);
    std::vector<ClsItem> bad = {{"ab", "", 0}, {"cd", "", 2}};
    CHECK_THROWS_AS(finetune_classifier(model, atlas, bad, ok, 2, 5, 0.1, 1), DataError);
    std::vector<ClsItem> none;
    CHECK_THROWS_AS(finetune_classifier(model, atlas, none, ok, 2, 5, 0.1, 1), DataError);
}

TEST_CASE("classifier inputs count both texts plus one end marker each") {
    Atlas atlas = the_atlas();
    Geometry geo;
    const int pa = static_cast<int>(patchify(render_text(atlas, utf8_decode("abc")), geo).size());
    const int pb = static_cast<int>(patchify(render_text(atlas, utf8_decode("de")), geo).size());

    std::vector<ClsItem> pair_items = {{"abc", "de", 0}, {"abc", "de", 1}};
    // exactly text_a + marker + text_b + marker patches: fits at that window...
    auto fits = tiny_model(pa + pb + 2);
    CHECK_NOTHROW(finetune_classifier(fits, atlas, pair_items, pair_items, 2, 1, 0.1, 1));
    // ...and overflows one patch below it
    auto tight = tiny_model(pa + pb + 1);
    CHECK_THROWS_AS(finetune_classifier(tight, atlas, pair_items, pair_items, 2, 1, 0.1, 1),
                    DataError);

    // single texts append exactly one marker
    std::vector<ClsItem> single_items = {{"abc", "", 0}, {"abc", "", 1}};
    auto fits1 = tiny_model(pa + 1);
    CHECK_NOTHROW(finetune_classifier(fits1, atlas, single_items, single_items, 2, 1, 0.1, 1));
    auto tight1 = tiny_model(pa);
    CHECK_THROWS_AS(finetune_classifier(tight1, atlas, single_items, single_items, 2, 1, 0.1, 1),
                    DataError);
}

TEST_CASE("attack sweeps are deterministic and leave ratio zero untouched") {
    Atlas atlas = the_atlas();
    auto model = tiny_model(24);
    Vocabulary vocab = Vocabulary::load(kAssets + "/words.txt");
    AttackTable table = AttackTable::load(kAssets + "/confusables.txt");
    std::vector<GenTaskItem> items = {{"the cat", "sat"}, {"a dog", "ran"}, {"we go", "far"}};

    auto rows = attack_sweep(model, atlas, items, table, {0.0, 0.5}, 99, vocab);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].ratio == 0.0);
    CHECK(rows[1].ratio == 0.5);

    // ratio 0 is identical to the clean evaluation
    GenEvalResult clean = eval_lastword(model, atlas, items, vocab);
    CHECK(rows[0].accuracy == clean.accuracy);
    CHECK(rows[0].readability == clean.readability);
    CHECK(rows[0].evaluated == clean.evaluated);
    CHECK(rows[0].skipped == clean.skipped);

    // the whole sweep reproduces exactly
    auto rows2 = attack_sweep(model, atlas, items, table, {0.0, 0.5}, 99, vocab);
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].accuracy == rows2[i].accuracy);
        CHECK(rows[i].readability == rows2[i].readability);
        CHECK(rows[i].evaluated == rows2[i].evaluated);
        CHECK(rows[i].skipped == rows2[i].skipped);
    }
}

TEST_CASE("attention heatmaps cover the prompt strip at full contrast") {
    Atlas atlas = the_atlas();
    auto model = tiny_model(32, /*layers=*/2);
    const std::string prefix = "/tmp/pxlm_attn_test";

    auto paths = attention_heatmap(model, atlas, "ab cd", /*last_only=*/false, prefix);
    REQUIRE(paths.size() == 3);  // prompt + one heatmap per layer
    CHECK(paths[0] == prefix + "_prompt.pbm");
    CHECK(paths[1] == prefix + "_layer0.pgm");
    CHECK(paths[2] == prefix + "_layer1.pgm");

    // the prompt image round-trips to the rendered prompt (plus trailing gap)
    Strip expected = with_generation_gap(atlas, render_text(atlas, utf8_decode("ab cd")));
    Strip back = read_pbm(paths[0]);
    CHECK(back.width == expected.width);
    CHECK(back.px == expected.px);

    // heatmap header: P5, prompt width, 8 rows, maxval 255; max byte is 255
    std::ifstream pgm(paths[1], std::ios::binary);
    std::string magic, w, h, maxv;
    pgm >> magic >> w >> h >> maxv;
    CHECK(magic == "P5");
    CHECK(w == std::to_string(expected.width));
    CHECK(h == "8");
    CHECK(maxv == "255");
    pgm.get();  // single whitespace after the header
    std::vector<uint8_t> data(static_cast<size_t>(expected.width) * 8);
    pgm.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    CHECK(pgm.gcount() == static_cast<std::streamsize>(data.size()));
    CHECK(*std::max_element(data.begin(), data.end()) == 255);

    auto last = attention_heatmap(model, atlas, "ab cd", /*last_only=*/true, prefix + "_l");
    REQUIRE(last.size() == 2);
    CHECK(last[1] == prefix + "_l_layer1.pgm");
}
