#pragma once

#include <cstdint>
#include <string>

#include "pxlm/corpus.hpp"
#include "pxlm/model.hpp"
#include "pxlm/optim.hpp"
#include "pxlm/train.hpp"

namespace pxlm {

// Every tunable of a run, with desk-scale defaults. Populated from a config
// file of `key = value` lines ('#' comments, [section] headers qualifying
// the keys as section.key), then optionally overridden by CLI flags.
// Unknown keys are rejected, naming the offender.
struct RunConfig {
    uint64_t seed = 42;

    ModelConfig model;

    // [train]
    size_t batch_size = 16;
    uint64_t total_steps = 2000;
    uint64_t checkpoint_every = 500;
    uint64_t log_every = 10;
    Schedule schedule{1e-3, 1e-5, 100, 2000};
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8, weight_decay = 0.01;

    // [stage2]
    Stage2Config stage2;
    uint64_t stage2_steps = 200;

    // [segment]
    SegmenterConfig segmenter;

    // [paths]
    std::string atlas_path, vocab_path, attack_table_path;

    // applies one key (already section-qualified, e.g. "model.layers")
    void set(const std::string& key, const std::string& value);

    // parses a config file; later assignments win
    void load_file(const std::string& path);

    // the fully resolved configuration as config-file text (logged per run)
    std::string resolved() const;

    // Stamps the optimizer hyperparameters onto an existing optimizer.
    // Checkpoints carry the moment slots and step count but not these knobs,
    // so a resumed run must re-apply them from its config or it silently
    // trains with the built-in defaults.
    void configure(AdamW<float>& opt) const {
        opt.beta1 = beta1;
        opt.beta2 = beta2;
        opt.eps = adam_eps;
        opt.weight_decay = weight_decay;
    }

    AdamW<float> make_adamw() const {
        AdamW<float> opt;
        configure(opt);
        return opt;
    }
};

}  // namespace pxlm
