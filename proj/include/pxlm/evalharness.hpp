#pragma once

#include <string>
#include <vector>

#include "pxlm/infer.hpp"
#include "pxlm/model.hpp"
#include "pxlm/render.hpp"

namespace pxlm {

// ---------------------------------------------------------------------------
// task files (tab-separated)
// ---------------------------------------------------------------------------

struct GenTaskItem {
    std::string context, target;
};
// one line per item: context <TAB> target
std::vector<GenTaskItem> load_gen_task(const std::string& path);

struct ClsItem {
    std::string text_a, text_b;  // text_b empty for single-text tasks
    int label = 0;
};
// one line per item: text_a [<TAB> text_b] <TAB> integer label
std::vector<ClsItem> load_cls_task(const std::string& path);

// ---------------------------------------------------------------------------
// generative evaluation
// ---------------------------------------------------------------------------

struct GenEvalResult {
    double accuracy = 0.0;     // first generated word matches the target
    double readability = 0.0;  // first generated word is any vocabulary word
    size_t evaluated = 0;
    size_t skipped = 0;  // prompt + generation would not fit the window
    std::vector<std::string> recognized;  // per evaluated item
};

// Prompts with each context and generates enough steps to cover the longest
// rendered target plus two patches of slack. Items whose prompt cannot fit
// are skipped and counted.
GenEvalResult eval_lastword(Model<float>& model, const Atlas& atlas,
                            const std::vector<GenTaskItem>& items, const Vocabulary& vocab);

// Few-shot variant: the first `shots` items become demonstrations, the rest
// are evaluated. Each demonstration is rendered as "context|target"; the
// query ends with the bare "|" delimiter; examples are joined by two spaces.
GenEvalResult eval_fewshot(Model<float>& model, const Atlas& atlas,
                           const std::vector<GenTaskItem>& items, int shots,
                           const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// frozen-backbone classification probe
// ---------------------------------------------------------------------------

struct FinetuneResult {
    double val_accuracy = 0.0;
    int epochs_ran = 0;
};

// Renders each text (pairs are joined by an end marker patch between them),
// appends the trailing end marker, and reads the final hidden state at that
// last position as the sequence embedding. A linear softmax head is trained
// on these frozen features with Adam; training stops early when validation
// accuracy fails to improve for `patience` epochs.
FinetuneResult finetune_classifier(Model<float>& model, const Atlas& atlas,
                                   const std::vector<ClsItem>& train,
                                   const std::vector<ClsItem>& val, int n_classes,
                                   int max_epochs, double lr, uint64_t seed, int patience = 5);

// ---------------------------------------------------------------------------
// homoglyph attack sweep
// ---------------------------------------------------------------------------

struct AttackRow {
    double ratio = 0.0;
    double accuracy = 0.0;
    double readability = 0.0;
    size_t evaluated = 0, skipped = 0;
};

// Runs eval_lastword once per ratio with contexts attacked at that ratio.
// Item i at ratio index ri uses RNG seed (seed + ri * 1000003 + i), so every
// cell of the sweep is reproducible in isolation. Ratio 0 never draws from
// the RNG and is byte-identical to the clean evaluation.
std::vector<AttackRow> attack_sweep(Model<float>& model, const Atlas& atlas,
                                    const std::vector<GenTaskItem>& items, const AttackTable& table,
                                    const std::vector<double>& ratios, uint64_t seed,
                                    const Vocabulary& vocab);

// ---------------------------------------------------------------------------
// attention heatmaps
// ---------------------------------------------------------------------------

// For the first generated position (the last prompt position's forward
// pass), averages its attention row across heads per layer, paints each
// context patch's weight over that patch's 8 columns, normalizes the maximum
// to 255, and writes <prefix>_layerK.pgm strips width-matched to the prompt
// strip (written as <prefix>_prompt.pbm). last_only keeps just the final
// layer. Returns the written paths.
std::vector<std::string> attention_heatmap(Model<float>& model, const Atlas& atlas,
                                           const std::string& prompt_utf8, bool last_only,
                                           const std::string& out_prefix);

}  // namespace pxlm
