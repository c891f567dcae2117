#include "pxlm/corpus.hpp"

#include <fstream>

#include "pxlm/common.hpp"
#include "pxlm/utf8.hpp"

namespace pxlm {

namespace {

bool is_space(char32_t c) {
    return c == U' ' || c == U'\n' || c == U'\t' || c == U'\r' || c == U'\f' || c == U'\v';
}

bool is_terminator(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }

}  // namespace

std::vector<std::u32string> split_sentences(const std::u32string& text) {
    std::vector<std::u32string> out;
    std::u32string cur;
    for (size_t i = 0; i < text.size(); ++i) {
        const char32_t c = text[i];
        if (is_space(c)) {
            // collapse runs of whitespace to a single space inside a sentence
            if (!cur.empty() && cur.back() != U' ') cur.push_back(U' ');
            continue;
        }
        cur.push_back(c);
        if (is_terminator(c) && (i + 1 == text.size() || is_space(text[i + 1]))) {
            while (!cur.empty() && cur.back() == U' ') cur.pop_back();
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        }
    }
    while (!cur.empty() && cur.back() == U' ') cur.pop_back();
    while (!cur.empty() && cur.front() == U' ') cur.erase(cur.begin());
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<std::string> segment_text(const std::string& utf8_text, const SegmenterConfig& cfg) {
    if (cfg.l_min > cfg.l_max) throw UsageError("segmenter: l_min must not exceed l_max");
    const auto sentences = split_sentences(utf8_decode(utf8_text));

    std::vector<std::string> out;
    std::u32string sample;
    auto emit_if_long_enough = [&]() {
        if (sample.size() >= cfg.l_min) out.push_back(utf8_encode(sample));
    };
    for (const auto& sent : sentences) {
        const size_t joined = sample.empty() ? sent.size() : sample.size() + 1 + sent.size();
        if (joined > cfg.l_max) {
            emit_if_long_enough();
            sample = sent;  // an oversize lone sentence still becomes the sample
        } else {
            if (!sample.empty()) sample.push_back(U' ');
            sample += sent;
        }
    }
    emit_if_long_enough();
    return out;
}

PatchSeq sample_from_text(const Atlas& atlas, const Geometry& geo, uint16_t window,
                          const std::string& utf8_text, BuildStats* stats) {
    std::u32string text = utf8_decode(utf8_text);
    std::u32string renderable;
    renderable.reserve(text.size());
    for (char32_t c : text) {
        if (c == U' ' || atlas.find(c)) {
            renderable.push_back(c);
        } else if (stats) {
            ++stats->dropped_chars;
        }
    }

    PatchSeq seq;
    seq.source_text = utf8_encode(renderable);
    seq.patches = patchify(render_text(atlas, renderable), geo);
    if (seq.patches.size() > window) {
        seq.patches.resize(window);
        if (stats) ++stats->truncated;
    }
    if (seq.patches.size() < window) seq.patches.push_back(eos_patch(geo));
    return seq;
}

Dataset build_dataset(const Atlas& atlas, const Geometry& geo, uint16_t window,
                      const std::vector<std::string>& texts, const SegmenterConfig& cfg,
                      bool per_line, BuildStats* stats) {
    Dataset ds;
    ds.meta.geo = geo;
    ds.meta.window = window;
    for (const auto& text : texts) {
        std::vector<std::string> units;
        if (per_line) {
            units.push_back(text);
        } else {
            units = segment_text(text, cfg);
        }
        for (const auto& unit : units) {
            PatchSeq seq = sample_from_text(atlas, geo, window, unit, stats);
            if (seq.T() == 0) continue;
            ds.samples.push_back(std::move(seq));
        }
    }
    if (stats) stats->samples = ds.samples.size();
    return ds;
}

// ---------------------------------------------------------------------------
// binary container: magic "PXDS", version, geometry, then per sample a patch
// count and the patch bits packed MSB-first. Everything little-endian.
// ---------------------------------------------------------------------------

void write_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for write: " + path);
    out.write("PXDS", 4);
    write_le<uint32_t>(out, 1);
    write_le<uint8_t>(out, static_cast<uint8_t>(ds.meta.geo.H));
    write_le<uint8_t>(out, static_cast<uint8_t>(ds.meta.geo.W));
    write_le<uint8_t>(out, static_cast<uint8_t>(ds.meta.geo.C));
    write_le<uint8_t>(out, static_cast<uint8_t>(ds.meta.geo.L));
    write_le<uint16_t>(out, ds.meta.window);
    write_le<uint32_t>(out, static_cast<uint32_t>(ds.samples.size()));

    const size_t px = static_cast<size_t>(ds.meta.geo.patch_px());
    const size_t bytes_per_patch = (px + 7) / 8;
    for (const auto& s : ds.samples) {
        write_le<uint16_t>(out, static_cast<uint16_t>(s.patches.size()));
        for (const auto& patch : s.patches) {
            std::vector<uint8_t> packed(bytes_per_patch, 0);
            for (size_t b = 0; b < px; ++b)
                if (patch[b]) packed[b / 8] |= static_cast<uint8_t>(0x80u >> (b % 8));
            write_bytes(out, packed.data(), packed.size());
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset: " + path);
    char magic[4];
    read_bytes(in, magic, 4, "dataset magic");
    if (std::string(magic, 4) != "PXDS") throw DataError(path + ": bad magic (not a PXDS file)");
    const uint32_t version = read_le<uint32_t>(in, "dataset version");
    if (version != 1) throw DataError(path + ": unsupported version " + std::to_string(version));

    Dataset ds;
    ds.meta.geo.H = read_le<uint8_t>(in, "H");
    ds.meta.geo.W = read_le<uint8_t>(in, "W");
    ds.meta.geo.C = read_le<uint8_t>(in, "C");
    ds.meta.geo.L = read_le<uint8_t>(in, "L");
    ds.meta.window = read_le<uint16_t>(in, "window");
    const uint32_t count = read_le<uint32_t>(in, "sample count");

    const size_t px = static_cast<size_t>(ds.meta.geo.patch_px());
    const size_t bytes_per_patch = (px + 7) / 8;
    ds.samples.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t t = read_le<uint16_t>(in, "patch count");
        if (t > ds.meta.window)
            throw DataError(path + ": sample longer than window");
        auto& s = ds.samples[i];
        s.patches.assign(t, std::vector<uint8_t>(px, 0));
        std::vector<uint8_t> packed(bytes_per_patch);
        for (uint16_t p = 0; p < t; ++p) {
            read_bytes(in, packed.data(), packed.size(), "patch bits");
            for (size_t b = 0; b < px; ++b)
                s.patches[p][b] = (packed[b / 8] >> (7 - b % 8)) & 1;
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------

BatchIter::BatchIter(const Dataset& ds, size_t batch_size, uint64_t seed, uint64_t epoch)
    : ds_(ds), batch_size_(batch_size) {
    if (batch_size_ == 0) throw UsageError("batch size must be positive");
    order_.resize(ds.samples.size());
    for (size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    // distinct stream per epoch; the multiplier spreads epochs across seeds
    Rng rng(seed + epoch * 0x9E3779B97F4A7C15ull);
    rng.shuffle(order_);
}

bool BatchIter::next(Batch& out) {
    if (pos_ >= order_.size()) return false;
    const size_t end = std::min(pos_ + batch_size_, order_.size());
    const size_t px = static_cast<size_t>(ds_.meta.geo.patch_px());
    const size_t window = ds_.meta.window;

    out.patches.clear();
    out.mask.clear();
    out.eff_len.clear();
    for (size_t i = pos_; i < end; ++i) {
        const auto& s = ds_.samples[order_[i]];
        std::vector<uint8_t> flat(window * px, 0);
        std::vector<uint8_t> mask(window, 0);
        for (size_t p = 0; p < s.patches.size(); ++p) {
            std::copy(s.patches[p].begin(), s.patches[p].end(), flat.begin() + p * px);
            mask[p] = 1;
        }
        out.patches.push_back(std::move(flat));
        out.mask.push_back(std::move(mask));
        out.eff_len.push_back(s.T());
    }
    pos_ = end;
    return true;
}

}  // namespace pxlm
