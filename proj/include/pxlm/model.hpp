#pragma once

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pxlm/optim.hpp"
#include "pxlm/render.hpp"
#include "pxlm/rng.hpp"
#include "pxlm/tensor.hpp"

namespace pxlm {

// ---------------------------------------------------------------------------
// configuration
// ---------------------------------------------------------------------------

struct ModelConfig {
    int n_layers = 2;
    int d_model = 128;
    int n_heads = 4;
    int d_ff = 512;
    int window = 64;  // max patches of context
    Geometry geo;     // patch geometry; geo.L patches are predicted per position
    double rmsnorm_eps = 1e-6;
    double rope_base = 10000.0;
    double sigmoid_temp = 1.0;      // decode temperature
    double decode_threshold = 0.5;  // pixel on iff sigmoid(logit/temp) >= this

    int head_dim() const { return d_model / n_heads; }
    int patch_px() const { return geo.patch_px(); }
    int out_dim() const { return geo.L * geo.patch_px(); }

    void validate() const {
        if (n_layers < 1 || d_model < 1 || n_heads < 1 || d_ff < 1 || window < 1)
            throw UsageError("model config: all dimensions must be positive");
        if (d_model % n_heads != 0) throw UsageError("model config: d_model must divide by heads");
        if (head_dim() % 2 != 0) throw UsageError("model config: head_dim must be even (rotary pairs)");
        if (geo.H != 8 || geo.W != 8) throw UsageError("model config: patches are 8x8");
        if (geo.C < 1 || geo.L < 1) throw UsageError("model config: channels and patches-per-step >= 1");
        if (sigmoid_temp <= 0.0) throw UsageError("model config: sigmoid_temp must be positive");
    }

    std::string to_kv() const {
        std::ostringstream ss;
        ss.precision(17);
        ss << "layers=" << n_layers << "\nd_model=" << d_model << "\nheads=" << n_heads
           << "\nd_ff=" << d_ff << "\nwindow=" << window << "\nchannels=" << geo.C
           << "\npatches_per_step=" << geo.L << "\nrmsnorm_eps=" << rmsnorm_eps
           << "\nrope_base=" << rope_base << "\nsigmoid_temp=" << sigmoid_temp
           << "\ndecode_threshold=" << decode_threshold << "\n";
        return ss.str();
    }

    static ModelConfig from_kv(const std::map<std::string, std::string>& kv) {
        ModelConfig c;
        auto geti = [&](const char* k, int& dst) {
            if (auto it = kv.find(k); it != kv.end()) dst = std::stoi(it->second);
        };
        auto getd = [&](const char* k, double& dst) {
            if (auto it = kv.find(k); it != kv.end()) dst = std::stod(it->second);
        };
        geti("layers", c.n_layers);
        geti("d_model", c.d_model);
        geti("heads", c.n_heads);
        geti("d_ff", c.d_ff);
        geti("window", c.window);
        geti("channels", c.geo.C);
        geti("patches_per_step", c.geo.L);
        getd("rmsnorm_eps", c.rmsnorm_eps);
        getd("rope_base", c.rope_base);
        getd("sigmoid_temp", c.sigmoid_temp);
        getd("decode_threshold", c.decode_threshold);
        c.validate();
        return c;
    }
};

// Total parameter count for a given config (head included). Kept analytic so
// reference configurations can be documented without instantiating them.
inline size_t count_params(const ModelConfig& cfg, bool discriminator_head = false) {
    const size_t d = static_cast<size_t>(cfg.d_model);
    const size_t p = static_cast<size_t>(cfg.patch_px());
    const size_t ff = static_cast<size_t>(cfg.d_ff);
    const size_t out = discriminator_head ? 1 : static_cast<size_t>(cfg.out_dim());
    size_t n = p * d + d;                            // patch embedding + bias
    n += static_cast<size_t>(cfg.n_layers) *
         (d                   // attention rmsnorm gain
          + 4 * d * d         // wq wk wv wo
          + d                 // ff rmsnorm gain
          + 3 * d * ff);      // gate, up, down
    n += d;                   // final rmsnorm gain
    n += d * out + out;       // head + bias
    return n;
}

// ---------------------------------------------------------------------------
// the decoder-only transformer
// ---------------------------------------------------------------------------

// Node ids of interest from one forward build. Attention probabilities are
// recorded layer-major, head-minor, each a [T,T] matrix on the tape.
struct ForwardNodes {
    int hidden = -1;  // [T, d] after the final norm
    int logits = -1;  // [T, out_dim] (or [T,1] for a discriminator)
    std::vector<int> attn_probs;
    std::vector<int> layer_k, layer_v;  // [T, d] per layer; k is position-encoded
};

template <class S>
struct Model {
    ModelConfig cfg;
    bool is_discriminator = false;

    ParamTensor<S> embed_w, embed_b;
    struct LayerParams {
        ParamTensor<S> attn_gain, wq, wk, wv, wo, ff_gain, w_gate, w_up, w_down;
    };
    std::vector<LayerParams> layers;
    ParamTensor<S> final_gain, head_w, head_b;

    void build(const ModelConfig& c, bool discriminator = false) {
        c.validate();
        cfg = c;
        is_discriminator = discriminator;
        const int d = cfg.d_model, p = cfg.patch_px(), ff = cfg.d_ff;
        const int out = discriminator ? 1 : cfg.out_dim();
        embed_w.init_shape("embed.w", {p, d});
        embed_b.init_shape("embed.b", {1, d});
        layers.resize(static_cast<size_t>(cfg.n_layers));
        for (int l = 0; l < cfg.n_layers; ++l) {
            auto& L = layers[static_cast<size_t>(l)];
            const std::string pre = "layer" + std::to_string(l) + ".";
            L.attn_gain.init_shape(pre + "attn_gain", {1, d});
            L.wq.init_shape(pre + "wq", {d, d});
            L.wk.init_shape(pre + "wk", {d, d});
            L.wv.init_shape(pre + "wv", {d, d});
            L.wo.init_shape(pre + "wo", {d, d});
            L.ff_gain.init_shape(pre + "ff_gain", {1, d});
            L.w_gate.init_shape(pre + "w_gate", {d, ff});
            L.w_up.init_shape(pre + "w_up", {d, ff});
            L.w_down.init_shape(pre + "w_down", {ff, d});
        }
        final_gain.init_shape("final_gain", {1, d});
        head_w.init_shape("head.w", {d, out});
        head_b.init_shape("head.b", {1, out});
    }

    // Projections start small and normal, norms at identity, biases at zero.
    // A discriminator head starts at exactly zero so its initial score is
    // exactly 0.5 everywhere.
    void init_params(Rng& rng) {
        auto fill_normal = [&](ParamTensor<S>& p) {
            for (auto& w : p.w) w = static_cast<S>(rng.normal() * 0.02);
        };
        auto fill_const = [](ParamTensor<S>& p, S v) {
            for (auto& w : p.w) w = v;
        };
        fill_normal(embed_w);
        fill_const(embed_b, S(0));
        for (auto& L : layers) {
            fill_const(L.attn_gain, S(1));
            fill_normal(L.wq);
            fill_normal(L.wk);
            fill_normal(L.wv);
            fill_normal(L.wo);
            fill_const(L.ff_gain, S(1));
            fill_normal(L.w_gate);
            fill_normal(L.w_up);
            fill_normal(L.w_down);
        }
        fill_const(final_gain, S(1));
        if (is_discriminator) {
            fill_const(head_w, S(0));
        } else {
            fill_normal(head_w);
        }
        fill_const(head_b, S(0));
    }

    std::vector<ParamTensor<S>*> params() {
        std::vector<ParamTensor<S>*> out = {&embed_w, &embed_b};
        for (auto& L : layers)
            for (auto* p : {&L.attn_gain, &L.wq, &L.wk, &L.wv, &L.wo, &L.ff_gain, &L.w_gate,
                            &L.w_up, &L.w_down})
                out.push_back(p);
        out.push_back(&final_gain);
        out.push_back(&head_w);
        out.push_back(&head_b);
        return out;
    }
    std::vector<const ParamTensor<S>*> params() const {
        auto ps = const_cast<Model*>(this)->params();
        return {ps.begin(), ps.end()};
    }

    void zero_grad() {
        for (auto* p : params()) std::fill(p->g.begin(), p->g.end(), S(0));
    }

    // Full causal forward over x_node ([T, patch_px] on the tape). When
    // grads_on, parameter leaves are registered with their gradient sinks;
    // otherwise the same graph is built values-only.
    ForwardNodes forward(Tape<S>& t, int x_node, int T, bool grads_on) {
        if (T < 1) throw NumericError("forward: empty sequence");
        if (T > cfg.window) throw DataError("forward: sequence exceeds context window");
        auto leaf = [&](ParamTensor<S>& p) {
            const int r = p.dims.size() == 2 ? p.dims[0] : 1;
            const int c = p.dims.size() == 2 ? p.dims[1] : static_cast<int>(p.size());
            return t.leaf(p.w.data(), r, c, grads_on ? p.g.data() : nullptr);
        };
        ForwardNodes fw;
        const int d = cfg.d_model, hd = cfg.head_dim();
        const S inv_sqrt_hd = static_cast<S>(1.0 / std::sqrt(static_cast<double>(hd)));

        int h = t.add_row(t.matmul(x_node, leaf(embed_w)), leaf(embed_b));
        for (auto& L : layers) {
            // attention sublayer (pre-norm residual)
            int a = t.rmsnorm_rows(h, leaf(L.attn_gain), static_cast<S>(cfg.rmsnorm_eps));
            int q = t.rope(t.matmul(a, leaf(L.wq)), hd, static_cast<S>(cfg.rope_base), 0);
            int k = t.rope(t.matmul(a, leaf(L.wk)), hd, static_cast<S>(cfg.rope_base), 0);
            int v = t.matmul(a, leaf(L.wv));
            fw.layer_k.push_back(k);
            fw.layer_v.push_back(v);
            int wo = leaf(L.wo);
            int attn_sum = -1;
            for (int head = 0; head < cfg.n_heads; ++head) {
                int qh = t.block(q, 0, head * hd, T, hd);
                int kh = t.block(k, 0, head * hd, T, hd);
                int vh = t.block(v, 0, head * hd, T, hd);
                int probs = t.softmax_rows(t.scale(t.matmul(qh, kh, false, true), inv_sqrt_hd), 0);
                fw.attn_probs.push_back(probs);
                int ctx = t.matmul(probs, vh);
                int contrib = t.matmul(ctx, t.block(wo, head * hd, 0, hd, d));
                attn_sum = head == 0 ? contrib : t.add(attn_sum, contrib);
            }
            h = t.add(h, attn_sum);

            // feed-forward sublayer: swish(x W_gate) * (x W_up) W_down
            int f = t.rmsnorm_rows(h, leaf(L.ff_gain), static_cast<S>(cfg.rmsnorm_eps));
            int gate = t.matmul(f, leaf(L.w_gate));
            int act = t.mul(t.mul(gate, t.sigmoid(gate)), t.matmul(f, leaf(L.w_up)));
            h = t.add(h, t.matmul(act, leaf(L.w_down)));
        }
        fw.hidden = t.rmsnorm_rows(h, leaf(final_gain), static_cast<S>(cfg.rmsnorm_eps));
        fw.logits = t.add_row(t.matmul(fw.hidden, leaf(head_w)), leaf(head_b));
        return fw;
    }

    // ------------------------------------------------------------------
    // cached scoring: a frozen prefix forward reused across many candidate
    // patches. The cache stores each layer's position-encoded keys and
    // values; scoring a candidate at position `pos` then costs one
    // single-row pass that attends over cache rows 0..pos-1 plus itself.
    // ------------------------------------------------------------------

    struct KVCache {
        int T = 0;
        std::vector<std::vector<S>> k, v;  // per layer, [T, d] row-major
    };

    KVCache build_cache(const std::vector<S>& x_flat, int T) {
        Tape<S> t;
        int x = t.leaf(x_flat.data(), T, cfg.patch_px(), nullptr);
        ForwardNodes fw = forward(t, x, T, /*grads_on=*/false);
        KVCache cache;
        cache.T = T;
        for (size_t l = 0; l < layers.size(); ++l) {
            const S* kp = t.values(fw.layer_k[l]);
            const S* vp = t.values(fw.layer_v[l]);
            cache.k.emplace_back(kp, kp + static_cast<size_t>(T) * cfg.d_model);
            cache.v.emplace_back(vp, vp + static_cast<size_t>(T) * cfg.d_model);
        }
        return cache;
    }

    // Scores one candidate patch node ([1, patch_px], may carry gradients)
    // as if it sat at position `pos` with the cached prefix before it.
    // Returns the [1,1] logit node. grads_on controls THIS model's leaves;
    // gradients always flow through to the patch node if it wants them.
    int score_cached(Tape<S>& t, const KVCache& cache, int patch_node, int pos, bool grads_on) {
        if (pos < 0 || pos > cache.T || pos >= cfg.window)
            throw NumericError("score_cached: position outside cache/window");
        auto leaf = [&](ParamTensor<S>& p) {
            const int r = p.dims.size() == 2 ? p.dims[0] : 1;
            const int c = p.dims.size() == 2 ? p.dims[1] : static_cast<int>(p.size());
            return t.leaf(p.w.data(), r, c, grads_on ? p.g.data() : nullptr);
        };
        const int d = cfg.d_model, hd = cfg.head_dim();
        const S inv_sqrt_hd = static_cast<S>(1.0 / std::sqrt(static_cast<double>(hd)));

        int h = t.add_row(t.matmul(patch_node, leaf(embed_w)), leaf(embed_b));
        for (size_t l = 0; l < layers.size(); ++l) {
            auto& L = layers[l];
            int a = t.rmsnorm_rows(h, leaf(L.attn_gain), static_cast<S>(cfg.rmsnorm_eps));
            int q = t.rope(t.matmul(a, leaf(L.wq)), hd, static_cast<S>(cfg.rope_base), pos);
            int k_self = t.rope(t.matmul(a, leaf(L.wk)), hd, static_cast<S>(cfg.rope_base), pos);
            int v_self = t.matmul(a, leaf(L.wv));
            // prefix keys/values enter as constants: the prefix is frozen
            int k_all, v_all;
            if (pos > 0) {
                std::vector<S> kc(cache.k[l].begin(), cache.k[l].begin() + static_cast<size_t>(pos) * d);
                std::vector<S> vc(cache.v[l].begin(), cache.v[l].begin() + static_cast<size_t>(pos) * d);
                k_all = t.concat_rows(t.constant(std::move(kc), pos, d), k_self);
                v_all = t.concat_rows(t.constant(std::move(vc), pos, d), v_self);
            } else {
                k_all = k_self;
                v_all = v_self;
            }
            int wo = leaf(L.wo);
            int attn_sum = -1;
            for (int head = 0; head < cfg.n_heads; ++head) {
                int qh = t.block(q, 0, head * hd, 1, hd);
                int kh = t.block(k_all, 0, head * hd, pos + 1, hd);
                int vh = t.block(v_all, 0, head * hd, pos + 1, hd);
                // single query row attending over the whole prefix + itself
                int probs = t.softmax_rows(t.scale(t.matmul(qh, kh, false, true), inv_sqrt_hd), pos);
                int ctx = t.matmul(probs, vh);
                int contrib = t.matmul(ctx, t.block(wo, head * hd, 0, hd, d));
                attn_sum = head == 0 ? contrib : t.add(attn_sum, contrib);
            }
            h = t.add(h, attn_sum);
            int f = t.rmsnorm_rows(h, leaf(L.ff_gain), static_cast<S>(cfg.rmsnorm_eps));
            int gate = t.matmul(f, leaf(L.w_gate));
            int act = t.mul(t.mul(gate, t.sigmoid(gate)), t.matmul(f, leaf(L.w_up)));
            h = t.add(h, t.matmul(act, leaf(L.w_down)));
        }
        int hfin = t.rmsnorm_rows(h, leaf(final_gain), static_cast<S>(cfg.rmsnorm_eps));
        return t.add_row(t.matmul(hfin, leaf(head_w)), leaf(head_b));
    }

    // Thresholds one position's logit block into geo.L binary patches:
    // value 1 iff sigmoid(logit / temp) >= decode_threshold.
    std::vector<std::vector<uint8_t>> decode_logits(const S* block) const {
        const int P = cfg.patch_px();
        std::vector<std::vector<uint8_t>> out(static_cast<size_t>(cfg.geo.L),
                                              std::vector<uint8_t>(static_cast<size_t>(P), 0));
        for (int o = 0; o < cfg.geo.L; ++o)
            for (int b = 0; b < P; ++b) {
                const double z = static_cast<double>(block[o * P + b]) / cfg.sigmoid_temp;
                const double pr = 1.0 / (1.0 + std::exp(-z));
                out[static_cast<size_t>(o)][static_cast<size_t>(b)] =
                    pr >= cfg.decode_threshold ? 1 : 0;
            }
        return out;
    }
};

// The adversarial scorer starts as a full copy of the pretrained generator
// with a fresh zero single-logit head: its initial probability is exactly
// 0.5 for every input.
template <class S>
Model<S> discriminator_from(const Model<S>& gen) {
    Model<S> disc;
    disc.build(gen.cfg, /*discriminator=*/true);
    auto src = gen.params();
    auto dst = disc.params();
    for (size_t i = 0; i + 2 < src.size(); ++i) dst[i]->w = src[i]->w;  // all but head.w/head.b
    return disc;
}

// Flattens 0/1 patch bytes into the [T, patch_px] scalar matrix a forward
// pass consumes.
template <class S>
std::vector<S> patches_to_scalars(const std::vector<std::vector<uint8_t>>& patches) {
    std::vector<S> out;
    if (patches.empty()) return out;
    out.reserve(patches.size() * patches[0].size());
    for (const auto& p : patches)
        for (uint8_t b : p) out.push_back(static_cast<S>(b));
    return out;
}

}  // namespace pxlm
