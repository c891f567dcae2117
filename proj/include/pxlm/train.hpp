#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "pxlm/corpus.hpp"
#include "pxlm/model.hpp"
#include "pxlm/optim.hpp"

namespace pxlm {

// ---------------------------------------------------------------------------
// per-sequence reconstruction loss
// ---------------------------------------------------------------------------

// Targets and mask for next-patch prediction: position i predicts the L
// patches i+1 .. i+L, so it contributes to the loss only when all of them
// exist within the sequence's real (unpadded) length.
template <class S>
void build_prediction_targets(const std::vector<S>& x, int T_eff, const Geometry& geo,
                              std::vector<S>& targets, std::vector<uint8_t>& mask) {
    const int P = geo.patch_px(), L = geo.L;
    targets.assign(static_cast<size_t>(T_eff) * L * P, S(0));
    mask.assign(static_cast<size_t>(T_eff) * L * P, 0);
    for (int i = 0; i + L <= T_eff - 1; ++i) {
        for (int o = 0; o < L; ++o) {
            const size_t dst = (static_cast<size_t>(i) * L + o) * P;
            const size_t src = static_cast<size_t>(i + 1 + o) * P;
            for (int b = 0; b < P; ++b) {
                targets[dst + b] = x[src + b];
                mask[dst + b] = 1;
            }
        }
    }
}

// Builds the reconstruction loss node for one sequence on an existing tape.
// Binary geometry uses pixel BCE; multi-channel uses clipped squared error.
template <class S>
int reconstruction_loss_node(Tape<S>& t, const Geometry& geo, int logits_node,
                             const std::vector<S>& x, int T_eff) {
    std::vector<S> targets;
    std::vector<uint8_t> mask;
    build_prediction_targets(x, T_eff, geo, targets, mask);
    if (geo.C == 1) return t.bce_masked(logits_node, std::move(targets), std::move(mask));
    return t.mse_clipped_masked(logits_node, std::move(targets), std::move(mask));
}

// ---------------------------------------------------------------------------
// step metrics (one CSV row per optimizer step)
// ---------------------------------------------------------------------------

struct StepMetrics {
    uint64_t step = 0;
    double loss_rec = 0.0;
    double loss_pcaa = 0.0;
    double lambda_auto = 1.0;  // the factor actually applied this step
    double scale_rec = 0.0;
    double scale_pcaa = 0.0;
    double disc_acc = 0.0;
    double lr = 0.0;
};

class MetricsWriter {
  public:
    MetricsWriter(const std::string& path, bool append) {
        const bool fresh = !append || !std::ifstream(path).good();
        f_.open(path, append ? std::ios::app : std::ios::trunc);
        if (!f_) throw DataError("cannot open metrics file: " + path);
        if (fresh) f_ << "step,loss_rec,loss_pcaa,lambda_auto,scale_rec,scale_pcaa,disc_acc,lr\n";
    }
    void row(const StepMetrics& m) {
        f_.precision(10);
        f_ << m.step << ',' << m.loss_rec << ',' << m.loss_pcaa << ',' << m.lambda_auto << ','
           << m.scale_rec << ',' << m.scale_pcaa << ',' << m.disc_acc << ',' << m.lr << '\n';
        f_.flush();
    }

  private:
    std::ofstream f_;
};

// ---------------------------------------------------------------------------
// stage 1: teacher-forced reconstruction
// ---------------------------------------------------------------------------

namespace detail {

// Copies the output-head gradients (weight and bias) into one flat vector —
// the statistic the loss balancing is measured on.
template <class S>
std::vector<S> head_grads(const Model<S>& m) {
    std::vector<S> out;
    out.reserve(m.head_w.size() + m.head_b.size());
    out.insert(out.end(), m.head_w.g.begin(), m.head_w.g.end());
    out.insert(out.end(), m.head_b.g.begin(), m.head_b.g.end());
    return out;
}

template <class S>
double delta_scale(const std::vector<S>& before, const std::vector<S>& after) {
    double s = 0.0;
    for (size_t i = 0; i < before.size(); ++i)
        s += std::fabs(static_cast<double>(after[i]) - static_cast<double>(before[i]));
    return before.empty() ? 0.0 : s / static_cast<double>(before.size());
}

// Extracts the first T_eff real patches of a padded batch row as scalars.
template <class S>
std::vector<S> effective_input(const std::vector<uint8_t>& padded, int T_eff, int patch_px) {
    std::vector<S> x(static_cast<size_t>(T_eff) * patch_px);
    for (size_t i = 0; i < x.size(); ++i) x[i] = static_cast<S>(padded[i]);
    return x;
}

inline void check_finite(double v, const char* what, uint64_t step) {
    if (!std::isfinite(v))
        throw NumericError(std::string(what) + " is not finite at step " + std::to_string(step));
}

}  // namespace detail

// One optimizer step over a padded batch. Each sequence is processed at its
// effective length: causal attention plus the target mask make the padded
// and sliced computations identical, so the slice is purely a speedup.
// Per-sequence gradients accumulate and are averaged over the sequences that
// contributed at least one unmasked target.
template <class S>
StepMetrics stage1_step(Model<S>& gen, AdamW<S>& opt, const Schedule& sched, uint64_t step_no,
                        const Batch& batch, const Geometry& geo) {
    gen.zero_grad();
    const int P = geo.patch_px();
    double loss_sum = 0.0, scale_sum = 0.0;
    int contributed = 0;

    for (size_t s = 0; s < batch.patches.size(); ++s) {
        const int T_eff = batch.eff_len[s];
        if (T_eff < geo.L + 1) continue;  // no position has a full target
        auto x = detail::effective_input<S>(batch.patches[s], T_eff, P);
        Tape<S> t;
        int xn = t.leaf(x.data(), T_eff, P, nullptr);
        ForwardNodes fw = gen.forward(t, xn, T_eff, /*grads_on=*/true);
        int loss = reconstruction_loss_node(t, geo, fw.logits, x, T_eff);

        const auto before = detail::head_grads(gen);
        t.backward(loss);
        scale_sum += detail::delta_scale(before, detail::head_grads(gen));

        loss_sum += static_cast<double>(t.scalar(loss));
        ++contributed;
    }
    if (contributed == 0) throw NumericError("stage1_step: batch had no usable sequences");

    for (auto* p : gen.params())
        for (auto& g : p->g) g /= static_cast<S>(contributed);

    StepMetrics m;
    m.step = step_no;
    m.loss_rec = loss_sum / contributed;
    m.scale_rec = scale_sum / contributed;
    m.lr = sched.lr_at(step_no);
    detail::check_finite(m.loss_rec, "reconstruction loss", step_no);
    opt.step(m.lr, gen.params());
    return m;
}

// ---------------------------------------------------------------------------
// stage 2: adversarial refinement with automatic gradient balancing
// ---------------------------------------------------------------------------

struct Stage2Config {
    double lambda_m = 0.1;   // manual adversarial weight
    double delta = 1e-8;     // balancing division guard
    int fake_samples = 30;   // generated patches scored per sequence
    double prob_clip = 1e-7; // clamp for log() in the adversarial loss
};

struct Stage2State {
    double lambda_auto = 1.0;  // produced by the previous batch, applied to this one
};

// One adversarial step, three phases per batch:
//   1. reconstruction backward; the output-head gradient delta gives scale_rec
//   2. fake patches (teacher-forced next-patch probabilities) are scored by
//      the frozen discriminator through its real-prefix caches; the mean
//      -log D(fake) loss, scaled by lambda_m * lambda_auto from the PREVIOUS
//      batch, is backpropagated into the generator only. The head delta,
//      un-scaled, gives scale_pcaa; both scales update lambda_auto for the
//      next batch. The generator steps on the combined gradients.
//   3. the discriminator trains on the real patches (full forward, exact
//      gradients, label 1) and the same fakes (label 0, scored through the
//      constant caches — an approximation documented in the README).
// Discriminator gradients never reach generator weights and vice versa.
template <class S>
StepMetrics stage2_step(Model<S>& gen, Model<S>& disc, AdamW<S>& gopt, AdamW<S>& dopt, double lr,
                        uint64_t step_no, const Batch& batch, const Geometry& geo,
                        const Stage2Config& cfg, Stage2State& state, Rng& rng) {
    const int P = geo.patch_px();
    const double lam = cfg.lambda_m * state.lambda_auto;

    struct SeqWork {
        std::vector<S> x;
        int T_eff = 0;
        std::vector<int> fake_pos;
        std::vector<std::vector<S>> fake_vals;  // detached probabilities
        typename Model<S>::KVCache cache;
    };
    std::vector<SeqWork> work;

    gen.zero_grad();
    double loss_rec_sum = 0.0, loss_pcaa_sum = 0.0, scale_rec_sum = 0.0, scale_pcaa_sum = 0.0;
    int contributed = 0;

    for (size_t s = 0; s < batch.patches.size(); ++s) {
        const int T_eff = batch.eff_len[s];
        if (T_eff < geo.L + 1) continue;
        SeqWork w;
        w.T_eff = T_eff;
        w.x = detail::effective_input<S>(batch.patches[s], T_eff, P);

        Tape<S> t;
        int xn = t.leaf(w.x.data(), T_eff, P, nullptr);
        ForwardNodes fw = gen.forward(t, xn, T_eff, /*grads_on=*/true);

        // phase 1: reconstruction
        int rec = reconstruction_loss_node(t, geo, fw.logits, w.x, T_eff);
        const auto g0 = detail::head_grads(gen);
        t.backward(rec);
        const auto g1 = detail::head_grads(gen);
        scale_rec_sum += detail::delta_scale(g0, g1);
        loss_rec_sum += static_cast<double>(t.scalar(rec));

        // phase 2: adversarial push on sampled fake patches
        const int n_fakeable = T_eff - 1;  // positions 1..T_eff-1 have a teacher-forced fake
        const int k = std::min(cfg.fake_samples, n_fakeable);
        for (size_t idx : rng.sample_indices(static_cast<size_t>(n_fakeable), static_cast<size_t>(k)))
            w.fake_pos.push_back(static_cast<int>(idx) + 1);

        // probabilities of the first predicted patch at every position
        int probs_all = t.sigmoid(t.block(fw.logits, 0, 0, T_eff, P));
        w.cache = disc.build_cache(w.x, T_eff);
        int pcaa_sum = -1;
        for (int pos : w.fake_pos) {
            int patch = t.block(probs_all, pos - 1, 0, 1, P);
            int logit = disc.score_cached(t, w.cache, patch, pos, /*grads_on=*/false);
            int prob = t.clamp(t.sigmoid(logit), static_cast<S>(cfg.prob_clip),
                               static_cast<S>(1.0 - cfg.prob_clip));
            int nll = t.scale(t.log(prob), S(-1));
            pcaa_sum = pcaa_sum < 0 ? nll : t.add(pcaa_sum, nll);

            const S* pv = t.values(patch);
            w.fake_vals.emplace_back(pv, pv + P);
        }
        int pcaa = t.scale(pcaa_sum, S(1) / S(k));
        loss_pcaa_sum += static_cast<double>(t.scalar(pcaa));
        t.backward(t.scale(pcaa, static_cast<S>(lam)));
        const auto g2 = detail::head_grads(gen);
        // recover the un-scaled adversarial gradient magnitude
        scale_pcaa_sum += lam != 0.0 ? detail::delta_scale(g1, g2) / lam : 0.0;

        work.push_back(std::move(w));
        ++contributed;
    }
    if (contributed == 0) throw NumericError("stage2_step: batch had no usable sequences");

    for (auto* p : gen.params())
        for (auto& g : p->g) g /= static_cast<S>(contributed);

    StepMetrics m;
    m.step = step_no;
    m.lr = lr;
    m.lambda_auto = state.lambda_auto;
    m.loss_rec = loss_rec_sum / contributed;
    m.loss_pcaa = loss_pcaa_sum / contributed;
    m.scale_rec = scale_rec_sum / contributed;
    m.scale_pcaa = scale_pcaa_sum / contributed;
    detail::check_finite(m.loss_rec, "reconstruction loss", step_no);
    detail::check_finite(m.loss_pcaa, "adversarial loss", step_no);
    detail::check_finite(m.scale_pcaa, "adversarial gradient scale", step_no);
    gopt.step(lr, gen.params());

    // next batch's balancing factor, from this batch's averaged scales
    state.lambda_auto = lambda_auto(m.scale_rec, m.scale_pcaa, cfg.delta);
    detail::check_finite(state.lambda_auto, "lambda_auto", step_no);

    // phase 3: discriminator update on real (label 1) and fake (label 0)
    disc.zero_grad();
    double correct = 0.0;
    size_t scored = 0;
    for (const auto& w : work) {
        Tape<S> t;
        int xn = t.leaf(w.x.data(), w.T_eff, P, nullptr);
        ForwardNodes dfw = disc.forward(t, xn, w.T_eff, /*grads_on=*/true);
        const int k = static_cast<int>(w.fake_pos.size());
        const double denom = w.T_eff + k;

        int real_bce = t.bce_masked(dfw.logits, std::vector<S>(static_cast<size_t>(w.T_eff), S(1)),
                                    std::vector<uint8_t>(static_cast<size_t>(w.T_eff), 1));
        int total = t.scale(real_bce, static_cast<S>(w.T_eff / denom));
        {
            // accuracy bookkeeping: a zero logit (probability exactly 0.5)
            // counts half, so an untrained scorer reads exactly 0.5
            const S* z = t.values(dfw.logits);
            for (int i = 0; i < w.T_eff; ++i) {
                if (z[i] > S(0)) correct += 1.0;
                else if (z[i] == S(0)) correct += 0.5;
            }
            scored += static_cast<size_t>(w.T_eff);
        }
        for (int j = 0; j < k; ++j) {
            int patch = t.constant(std::vector<S>(w.fake_vals[static_cast<size_t>(j)]), 1, P);
            int logit = disc.score_cached(t, w.cache, patch, w.fake_pos[static_cast<size_t>(j)],
                                          /*grads_on=*/true);
            const S z = t.values(logit)[0];
            if (z < S(0)) correct += 1.0;
            else if (z == S(0)) correct += 0.5;
            ++scored;
            int fake_bce = t.bce_masked(logit, {S(0)}, {1});
            total = t.add(total, t.scale(fake_bce, static_cast<S>(1.0 / denom)));
        }
        t.backward(total);
    }
    for (auto* p : disc.params())
        for (auto& g : p->g) g /= static_cast<S>(contributed);
    dopt.step(lr, disc.params());

    m.disc_acc = scored ? correct / static_cast<double>(scored) : 0.5;
    return m;
}

// ---------------------------------------------------------------------------
// training loops (resumable)
// ---------------------------------------------------------------------------

// Runs stage-1 steps from start_step (exclusive) to until_step (inclusive).
// Step numbering is 1-based so the warmup never applies a zero learning
// rate. The data order depends only on (seed, epoch), so resuming from a
// checkpointed step replays the exact schedule.
template <class S>
StepMetrics run_stage1(Model<S>& gen, AdamW<S>& opt, const Schedule& sched, const Dataset& ds,
                       size_t batch_size, uint64_t seed, uint64_t start_step, uint64_t until_step,
                       const std::function<void(const StepMetrics&)>& on_step) {
    if (ds.samples.empty()) throw DataError("training dataset is empty");
    const uint64_t bpe = (ds.samples.size() + batch_size - 1) / batch_size;  // batches per epoch
    uint64_t step = start_step;
    StepMetrics last;
    while (step < until_step) {
        const uint64_t epoch = step / bpe;
        BatchIter it(ds, batch_size, seed, epoch);
        Batch b;
        for (uint64_t skip = step % bpe; skip > 0; --skip) it.next(b);
        while (step < until_step && it.next(b)) {
            ++step;
            last = stage1_step(gen, opt, sched, step, b, ds.meta.geo);
            if (on_step) on_step(last);
        }
    }
    return last;
}

template <class S>
StepMetrics run_stage2(Model<S>& gen, Model<S>& disc, AdamW<S>& gopt, AdamW<S>& dopt, double lr,
                       const Dataset& ds, size_t batch_size, uint64_t seed, uint64_t start_step,
                       uint64_t until_step, const Stage2Config& cfg, Stage2State& state, Rng& rng,
                       const std::function<void(const StepMetrics&)>& on_step) {
    if (ds.samples.empty()) throw DataError("training dataset is empty");
    const uint64_t bpe = (ds.samples.size() + batch_size - 1) / batch_size;
    uint64_t step = start_step;
    StepMetrics last;
    while (step < until_step) {
        const uint64_t epoch = step / bpe;
        BatchIter it(ds, batch_size, seed, epoch);
        Batch b;
        for (uint64_t skip = step % bpe; skip > 0; --skip) it.next(b);
        while (step < until_step && it.next(b)) {
            ++step;
            last = stage2_step(gen, disc, gopt, dopt, lr, step, b, ds.meta.geo, cfg, state, rng);
            if (on_step) on_step(last);
        }
    }
    return last;
}

}  // namespace pxlm
