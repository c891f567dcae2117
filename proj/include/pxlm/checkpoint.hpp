#pragma once

#include <optional>
#include <string>

#include "pxlm/model.hpp"
#include "pxlm/optim.hpp"

namespace pxlm {

// Training progress carried inside a checkpoint so a run can resume exactly
// where it stopped, including the adversarial balancing state.
struct TrainState {
    uint64_t step = 0;
    int stage = 1;
    double lambda_auto_prev = 1.0;  // balancing factor produced by the last batch
    std::string rng_state;          // data-order RNG, standard stream encoding
};

// Binary container, all little-endian:
//   magic "PXCK", u32 version
//   length-prefixed config block (key=value lines: model config + progress)
//   model weights:   u32 tensor count, per tensor
//                    {length-prefixed name, u8 rank, u32 dims[rank], u64 byte
//                    offset}, then u64 blob byte length + raw f32 data
//   optimizer slots: same tensor scheme (count 0 when absent)
//   RNG block:       length-prefixed state string
// Tensor names carry a "gen." or "disc." prefix; optimizer slot names append
// ".m" / ".v". Weights round-trip bit-identically (raw IEEE f32).
void save_checkpoint(const std::string& path, const Model<float>& gen,
                     const AdamW<float>* opt_gen, const Model<float>* disc,
                     const AdamW<float>* opt_disc, const TrainState& state);

struct LoadedCheckpoint {
    ModelConfig cfg;
    TrainState state;
    Model<float> gen;
    std::optional<Model<float>> disc;
    std::optional<AdamW<float>> opt_gen, opt_disc;  // attached to their models
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace pxlm
