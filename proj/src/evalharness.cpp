#include "pxlm/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "pxlm/image_io.hpp"
#include "pxlm/rng.hpp"
#include "pxlm/utf8.hpp"

namespace pxlm {

namespace {

std::vector<std::vector<std::string>> load_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open task file: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::string col;
        std::istringstream ls(line);
        while (std::getline(ls, col, '\t')) cols.push_back(col);
        if (cols.size() < 2)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected tab-separated columns");
        rows.push_back(std::move(cols));
    }
    return rows;
}

}  // namespace

std::vector<GenTaskItem> load_gen_task(const std::string& path) {
    std::vector<GenTaskItem> items;
    for (auto& cols : load_tsv(path)) {
        if (cols.size() != 2) throw DataError(path + ": generation tasks have exactly 2 columns");
        items.push_back({cols[0], cols[1]});
    }
    return items;
}

std::vector<ClsItem> load_cls_task(const std::string& path) {
    std::vector<ClsItem> items;
    for (auto& cols : load_tsv(path)) {
        ClsItem it;
        if (cols.size() == 2) {
            it.text_a = cols[0];
        } else if (cols.size() == 3) {
            it.text_a = cols[0];
            it.text_b = cols[1];
        } else {
            throw DataError(path + ": classification tasks have 2 or 3 columns");
        }
        try {
            it.label = std::stoi(cols.back());
        } catch (const std::exception&) {
            throw DataError(path + ": label column must be an integer, got '" + cols.back() + "'");
        }
        items.push_back(std::move(it));
    }
    return items;
}

// ---------------------------------------------------------------------------

namespace {

int patches_needed(const Atlas& atlas, const Geometry& geo, const std::string& text) {
    const int w = rendered_width(atlas, utf8_decode(text));
    return (w + geo.W - 1) / geo.W;
}

GenEvalResult eval_items(Model<float>& model, const Atlas& atlas,
                         const std::vector<GenTaskItem>& items, const Vocabulary& vocab) {
    GenEvalResult res;
    if (items.empty()) return res;
    int longest = 0;
    for (const auto& it : items)
        longest = std::max(longest, patches_needed(atlas, model.cfg.geo, it.target));
    // enough steps for the longest target plus two patches of slack
    const int steps = (longest + 2 + model.cfg.geo.L - 1) / model.cfg.geo.L;

    size_t hits = 0;
    std::vector<GenTaskItem> evaluated_items;
    for (const auto& it : items) {
        GenerationResult g;
        try {
            g = generate(model, atlas, it.context, steps);
        } catch (const DataError&) {
            ++res.skipped;
            continue;
        }
        if (first_word_match(g.recognized.text, it.target)) ++hits;
        res.recognized.push_back(g.recognized.text);
        ++res.evaluated;
    }
    if (res.evaluated) {
        res.accuracy = static_cast<double>(hits) / static_cast<double>(res.evaluated);
        res.readability = readability(res.recognized, vocab);
    }
    return res;
}

}  // namespace

GenEvalResult eval_lastword(Model<float>& model, const Atlas& atlas,
                            const std::vector<GenTaskItem>& items, const Vocabulary& vocab) {
    return eval_items(model, atlas, items, vocab);
}

GenEvalResult eval_fewshot(Model<float>& model, const Atlas& atlas,
                           const std::vector<GenTaskItem>& items, int shots,
                           const Vocabulary& vocab) {
    if (shots < 0 || static_cast<size_t>(shots) >= items.size())
        throw UsageError("fewshot: shots must leave at least one item to evaluate");
    std::string demo;
    for (int i = 0; i < shots; ++i) {
        if (i) demo += "  ";
        demo += items[static_cast<size_t>(i)].context + "|" + items[static_cast<size_t>(i)].target;
    }
    std::vector<GenTaskItem> queries;
    for (size_t i = static_cast<size_t>(shots); i < items.size(); ++i) {
        std::string prompt = demo.empty() ? items[i].context + "|"
                                          : demo + "  " + items[i].context + "|";
        queries.push_back({prompt, items[i].target});
    }
    return eval_items(model, atlas, queries, vocab);
}

// ---------------------------------------------------------------------------

namespace {

// final-norm hidden state at the trailing end-marker position
std::vector<float> sequence_feature(Model<float>& model, const Atlas& atlas, const ClsItem& item) {
    const Geometry& geo = model.cfg.geo;
    auto patches = patchify(render_text(atlas, utf8_decode(item.text_a)), geo);
    patches.push_back(eos_patch(geo));
    if (!item.text_b.empty()) {
        auto more = patchify(render_text(atlas, utf8_decode(item.text_b)), geo);
        patches.insert(patches.end(), more.begin(), more.end());
        patches.push_back(eos_patch(geo));
    }
    const int T = static_cast<int>(patches.size());
    if (T > model.cfg.window)
        throw DataError("classifier input of " + std::to_string(T) + " patches exceeds window " +
                        std::to_string(model.cfg.window));
    auto x = patches_to_scalars<float>(patches);
    Tape<float> t;
    int xn = t.leaf(x.data(), T, geo.patch_px(), nullptr);
    ForwardNodes fw = model.forward(t, xn, T, /*grads_on=*/false);
    const float* h = t.values(fw.hidden) + static_cast<size_t>(T - 1) * model.cfg.d_model;
    return std::vector<float>(h, h + model.cfg.d_model);
}

}  // namespace

FinetuneResult finetune_classifier(Model<float>& model, const Atlas& atlas,
                                   const std::vector<ClsItem>& train,
                                   const std::vector<ClsItem>& val, int n_classes, int max_epochs,
                                   double lr, uint64_t seed, int patience) {
    if (n_classes < 2) throw UsageError("classifier: need at least 2 classes");
    if (train.empty() || val.empty()) throw DataError("classifier: empty train or val split");
    for (const auto& it : train)
        if (it.label < 0 || it.label >= n_classes) throw DataError("classifier: train label out of range");
    for (const auto& it : val)
        if (it.label < 0 || it.label >= n_classes) throw DataError("classifier: val label out of range");

    // backbone is frozen: compute every feature once
    const int d = model.cfg.d_model;
    std::vector<std::vector<float>> ftr, fva;
    for (const auto& it : train) ftr.push_back(sequence_feature(model, atlas, it));
    for (const auto& it : val) fva.push_back(sequence_feature(model, atlas, it));

    // standardize per dimension on the train split: every sequence ends at the
    // same end marker, so the raw features share one large common component and
    // the class signal rides on top of it at a much smaller scale
    {
        std::vector<double> mean(static_cast<size_t>(d), 0.0), var(static_cast<size_t>(d), 0.0);
        for (const auto& f : ftr)
            for (int j = 0; j < d; ++j) mean[static_cast<size_t>(j)] += f[static_cast<size_t>(j)];
        for (double& m : mean) m /= static_cast<double>(ftr.size());
        for (const auto& f : ftr)
            for (int j = 0; j < d; ++j) {
                const double c = f[static_cast<size_t>(j)] - mean[static_cast<size_t>(j)];
                var[static_cast<size_t>(j)] += c * c;
            }
        for (double& v : var) v = std::sqrt(v / static_cast<double>(ftr.size())) + 1e-6;
        auto apply = [&](std::vector<std::vector<float>>& fs) {
            for (auto& f : fs)
                for (int j = 0; j < d; ++j)
                    f[static_cast<size_t>(j)] = static_cast<float>(
                        (f[static_cast<size_t>(j)] - mean[static_cast<size_t>(j)]) /
                        var[static_cast<size_t>(j)]);
        };
        apply(ftr);
        apply(fva);
    }

    ParamTensor<double> W, b;
    W.init_shape("cls.w", {d, n_classes});
    b.init_shape("cls.b", {1, n_classes});
    Rng rng(seed);
    for (auto& w : W.w) w = rng.normal() * 0.01;

    AdamW<double> opt;
    opt.weight_decay = 0.0;
    std::vector<ParamTensor<double>*> params = {&W, &b};
    opt.attach(params);

    auto logits_of = [&](const std::vector<float>& x) {
        std::vector<double> z(static_cast<size_t>(n_classes));
        for (int c = 0; c < n_classes; ++c) {
            double s = b.w[static_cast<size_t>(c)];
            for (int i = 0; i < d; ++i)
                s += static_cast<double>(x[static_cast<size_t>(i)]) * W.w[static_cast<size_t>(i) * n_classes + c];
            z[static_cast<size_t>(c)] = s;
        }
        return z;
    };
    auto val_accuracy = [&]() {
        size_t hit = 0;
        for (size_t i = 0; i < fva.size(); ++i) {
            auto z = logits_of(fva[i]);
            const int pred = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
            if (pred == val[i].label) ++hit;
        }
        return static_cast<double>(hit) / static_cast<double>(fva.size());
    };

    // validation accuracy moves in steps and can sit flat while the logits are
    // still rotating, so convergence is judged on the training loss instead;
    // the reported accuracy is the best the probe reached along the way
    FinetuneResult res;
    res.val_accuracy = val_accuracy();
    double best_loss = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int epoch = 1; epoch <= max_epochs; ++epoch) {
        std::fill(W.g.begin(), W.g.end(), 0.0);
        std::fill(b.g.begin(), b.g.end(), 0.0);
        double loss = 0.0;
        for (size_t i = 0; i < ftr.size(); ++i) {
            auto z = logits_of(ftr[i]);
            const double mx = *std::max_element(z.begin(), z.end());
            double den = 0.0;
            for (double& v : z) {
                v = std::exp(v - mx);
                den += v;
            }
            loss -= std::log(std::max(z[static_cast<size_t>(train[i].label)] / den, 1e-300)) /
                    static_cast<double>(ftr.size());
            for (int c = 0; c < n_classes; ++c) {
                const double p = z[static_cast<size_t>(c)] / den;
                const double gl = (p - (c == train[i].label ? 1.0 : 0.0)) / static_cast<double>(ftr.size());
                b.g[static_cast<size_t>(c)] += gl;
                for (int j = 0; j < d; ++j)
                    W.g[static_cast<size_t>(j) * n_classes + c] +=
                        gl * static_cast<double>(ftr[i][static_cast<size_t>(j)]);
            }
        }
        opt.step(lr, params);
        res.epochs_ran = epoch;
        res.val_accuracy = std::max(res.val_accuracy, val_accuracy());
        if (loss < best_loss - 1e-9) {
            best_loss = loss;
            since_best = 0;
        } else if (++since_best >= patience) {
            break;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------

std::vector<AttackRow> attack_sweep(Model<float>& model, const Atlas& atlas,
                                    const std::vector<GenTaskItem>& items, const AttackTable& table,
                                    const std::vector<double>& ratios, uint64_t seed,
                                    const Vocabulary& vocab) {
    std::vector<AttackRow> rows;
    for (size_t ri = 0; ri < ratios.size(); ++ri) {
        std::vector<GenTaskItem> attacked;
        for (size_t i = 0; i < items.size(); ++i) {
            Rng rng(seed + ri * 1000003ull + i);
            attacked.push_back(
                {utf8_encode(apply_visual_attack(utf8_decode(items[i].context), table, ratios[ri], rng)),
                 items[i].target});
        }
        GenEvalResult r = eval_lastword(model, atlas, attacked, vocab);
        rows.push_back({ratios[ri], r.accuracy, r.readability, r.evaluated, r.skipped});
    }
    return rows;
}

// ---------------------------------------------------------------------------

std::vector<std::string> attention_heatmap(Model<float>& model, const Atlas& atlas,
                                           const std::string& prompt_utf8, bool last_only,
                                           const std::string& out_prefix) {
    const Geometry& geo = model.cfg.geo;
    Strip prompt = with_generation_gap(atlas, render_text(atlas, utf8_decode(prompt_utf8)));
    auto patches = patchify(prompt, geo);
    const int T = static_cast<int>(patches.size());
    if (T < 1) throw DataError("attention heatmap: prompt renders to zero patches");
    if (T > model.cfg.window) throw DataError("attention heatmap: prompt exceeds window");

    auto x = patches_to_scalars<float>(patches);
    Tape<float> t;
    int xn = t.leaf(x.data(), T, geo.patch_px(), nullptr);
    ForwardNodes fw = model.forward(t, xn, T, /*grads_on=*/false);

    std::vector<std::string> written;
    const std::string prompt_path = out_prefix + "_prompt.pbm";
    write_pbm(prompt_path, prompt);
    written.push_back(prompt_path);

    const int first = last_only ? model.cfg.n_layers - 1 : 0;
    for (int layer = first; layer < model.cfg.n_layers; ++layer) {
        // attention row of the position that predicts the first generated
        // patch (the last prompt position), averaged across heads
        std::vector<double> row(static_cast<size_t>(T), 0.0);
        for (int head = 0; head < model.cfg.n_heads; ++head) {
            const int node = fw.attn_probs[static_cast<size_t>(layer * model.cfg.n_heads + head)];
            const float* probs = t.values(node) + static_cast<size_t>(T - 1) * T;
            for (int j = 0; j < T; ++j) row[static_cast<size_t>(j)] += static_cast<double>(probs[j]);
        }
        double mx = 0.0;
        for (double v : row) mx = std::max(mx, v);
        std::vector<uint8_t> strip(static_cast<size_t>(prompt.width) * Strip::kHeight, 0);
        for (int c = 0; c < prompt.width; ++c) {
            const double v = row[static_cast<size_t>(c / geo.W)];
            const uint8_t g = mx > 0.0 ? static_cast<uint8_t>(std::lround(v / mx * 255.0)) : 0;
            for (int r = 0; r < Strip::kHeight; ++r)
                strip[static_cast<size_t>(r) * prompt.width + c] = g;
        }
        const std::string path = out_prefix + "_layer" + std::to_string(layer) + ".pgm";
        write_pgm(path, prompt.width, Strip::kHeight, strip);
        written.push_back(path);
    }
    return written;
}

}  // namespace pxlm
