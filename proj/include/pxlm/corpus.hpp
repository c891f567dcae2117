#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pxlm/atlas.hpp"
#include "pxlm/render.hpp"
#include "pxlm/rng.hpp"

namespace pxlm {

// ---------------------------------------------------------------------------
// text segmentation
// ---------------------------------------------------------------------------

struct SegmenterConfig {
    size_t l_max = 1180;  // max sample length in codepoints
    size_t l_min = 100;   // emit a sample only once it reaches this length
};

// Splits raw text into sentences: a sentence ends at '.', '!' or '?' when
// followed by whitespace or end of input. Whitespace (incl. newlines) between
// sentences is collapsed; empty sentences are dropped.
std::vector<std::u32string> split_sentences(const std::u32string& text);

// Greedy sentence packing. Sentences accumulate into a sample joined by
// single spaces; when the next sentence would push the sample past l_max,
// the sample is emitted if it has at least l_min codepoints (otherwise it is
// discarded) and the sentence starts a new sample — even if that lone
// sentence itself exceeds l_max. The final sample is emitted under the same
// l_min rule. Lengths count codepoints, including the joining spaces.
std::vector<std::string> segment_text(const std::string& utf8_text, const SegmenterConfig& cfg);

// ---------------------------------------------------------------------------
// dataset build + binary container
// ---------------------------------------------------------------------------

struct DatasetMeta {
    Geometry geo;
    uint16_t window = 64;  // max patches per sample (training context length)
};

struct Dataset {
    DatasetMeta meta;
    std::vector<PatchSeq> samples;
};

struct BuildStats {
    size_t samples = 0;
    size_t dropped_chars = 0;  // characters skipped for lack of a glyph
    size_t truncated = 0;      // samples cut to the window
};

// Renders one text into a patch sequence: strip -> patches, truncated to
// `window`, with the all-ones EOS patch appended when it fits. Characters
// missing from the atlas are dropped (counted in stats).
PatchSeq sample_from_text(const Atlas& atlas, const Geometry& geo, uint16_t window,
                          const std::string& utf8_text, BuildStats* stats = nullptr);

// Segment + render a whole corpus. With per_line=true every input line is
// one sample and segmentation (and its l_min floor) is bypassed — the mode
// used for small fixture corpora.
Dataset build_dataset(const Atlas& atlas, const Geometry& geo, uint16_t window,
                      const std::vector<std::string>& texts, const SegmenterConfig& cfg,
                      bool per_line, BuildStats* stats = nullptr);

void write_dataset(const std::string& path, const Dataset& ds);
Dataset read_dataset(const std::string& path);

// ---------------------------------------------------------------------------
// batching
// ---------------------------------------------------------------------------

// One padded training batch: every sample right-padded with blank patches to
// the window length; mask[i] = 1 for real patches, 0 for padding.
struct Batch {
    std::vector<std::vector<uint8_t>> patches;  // per seq: window * patch_px values
    std::vector<std::vector<uint8_t>> mask;     // per seq: window entries
    std::vector<int> eff_len;                   // real patch count per seq
};

// Deterministic epoch iterator: sample order is shuffled per epoch from
// (seed, epoch); the trailing short batch is kept.
class BatchIter {
  public:
    BatchIter(const Dataset& ds, size_t batch_size, uint64_t seed, uint64_t epoch);

    // fills `out`, returns false when the epoch is exhausted
    bool next(Batch& out);

  private:
    const Dataset& ds_;
    size_t batch_size_;
    std::vector<size_t> order_;
    size_t pos_ = 0;
};

}  // namespace pxlm
