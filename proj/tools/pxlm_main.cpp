// Command-line front end: everything the library does, as subcommands.
// Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric abort.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "pxlm/checkpoint.hpp"
#include "pxlm/corpus.hpp"
#include "pxlm/evalharness.hpp"
#include "pxlm/image_io.hpp"
#include "pxlm/infer.hpp"
#include "pxlm/runconfig.hpp"
#include "pxlm/train.hpp"
#include "pxlm/utf8.hpp"

namespace fs = std::filesystem;
using namespace pxlm;

namespace {

std::vector<std::string> read_text_files(const std::vector<std::string>& paths) {
    std::vector<std::string> out;
    for (const auto& p : paths) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw DataError("cannot open input: " + p);
        std::ostringstream ss;
        ss << in.rdbuf();
        out.push_back(ss.str());
    }
    return out;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open input: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

void require_geo_matches(const RunConfig& cfg, const Dataset& ds) {
    if (ds.meta.geo.C != cfg.model.geo.C || ds.meta.geo.L != cfg.model.geo.L)
        throw DataError("config geometry (channels=" + std::to_string(cfg.model.geo.C) +
                        ", patches_per_step=" + std::to_string(cfg.model.geo.L) +
                        ") does not match dataset (channels=" + std::to_string(ds.meta.geo.C) +
                        ", patches_per_step=" + std::to_string(ds.meta.geo.L) + ")");
    if (ds.meta.window > cfg.model.window)
        throw DataError("dataset window " + std::to_string(ds.meta.window) +
                        " exceeds model window " + std::to_string(cfg.model.window));
}

void log_resolved(const RunConfig& cfg, const std::string& out_dir) {
    std::cout << "resolved configuration:\n" << cfg.resolved() << std::flush;
    if (!out_dir.empty()) {
        std::ofstream f(out_dir + "/config.resolved");
        f << cfg.resolved();
    }
}

struct CommonOpts {
    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;
};

RunConfig make_config(const CommonOpts& c) {
    RunConfig cfg;
    if (!c.config_path.empty()) cfg.load_file(c.config_path);
    if (c.seed_set) cfg.seed = c.seed;
    return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& c) {
    cmd->add_option("--config", c.config_path, "config file (key = value, [section] headers)");
    cmd->add_option("--seed", c.seed, "RNG seed override")->each([&](const std::string&) {
        c.seed_set = true;
    });
}

int run(int argc, char** argv) {
    CLI::App app{"pixel-text language model laboratory"};
    app.require_subcommand(1);

    // ---- segment ----------------------------------------------------------
    auto* seg = app.add_subcommand("segment", "split raw text into training samples");
    std::string seg_input, seg_out;
    uint64_t seg_lmax = 0, seg_lmin = 0;
    CommonOpts seg_common;
    add_common(seg, seg_common);
    seg->add_option("--input", seg_input, "raw UTF-8 text file")->required();
    seg->add_option("--out", seg_out, "write samples here, one per line (default: stdout)");
    seg->add_option("--l-max", seg_lmax, "max sample length in characters");
    seg->add_option("--l-min", seg_lmin, "min sample length in characters");
    seg->callback([&]() {
        RunConfig cfg = make_config(seg_common);
        if (seg_lmax) cfg.segmenter.l_max = seg_lmax;
        if (seg_lmin) cfg.segmenter.l_min = seg_lmin;
        const auto texts = read_text_files({seg_input});
        const auto samples = segment_text(texts[0], cfg.segmenter);
        if (seg_out.empty()) {
            for (const auto& s : samples) std::cout << s << "\n";
        } else {
            std::ofstream out(seg_out);
            if (!out) throw DataError("cannot open for write: " + seg_out);
            for (const auto& s : samples) out << s << "\n";
        }
        std::cerr << "segments=" << samples.size() << "\n";
    });

    // ---- build-dataset -----------------------------------------------------
    auto* bd = app.add_subcommand("build-dataset", "render text into a patch dataset");
    std::vector<std::string> bd_inputs;
    std::string bd_out, bd_atlas;
    bool bd_per_line = false;
    CommonOpts bd_common;
    add_common(bd, bd_common);
    bd->add_option("--input", bd_inputs, "input text file(s)")->required();
    bd->add_option("--out", bd_out, "output dataset (.pxds)")->required();
    bd->add_option("--atlas", bd_atlas, "bitmap font atlas");
    bd->add_flag("--per-line", bd_per_line,
                 "treat each input line as one sample (skips segmentation and its length floor)");
    bd->callback([&]() {
        RunConfig cfg = make_config(bd_common);
        if (!bd_atlas.empty()) cfg.atlas_path = bd_atlas;
        if (cfg.atlas_path.empty()) throw UsageError("build-dataset: --atlas or paths.atlas required");
        Atlas atlas = Atlas::load(cfg.atlas_path);
        std::vector<std::string> units;
        if (bd_per_line) {
            for (const auto& p : bd_inputs)
                for (auto& l : read_lines(p)) units.push_back(std::move(l));
        } else {
            units = read_text_files(bd_inputs);
        }
        BuildStats stats;
        Dataset ds = build_dataset(atlas, cfg.model.geo, static_cast<uint16_t>(cfg.model.window),
                                   units, cfg.segmenter, bd_per_line, &stats);
        write_dataset(bd_out, ds);
        std::cout << "samples=" << stats.samples << " dropped_chars=" << stats.dropped_chars
                  << " truncated=" << stats.truncated << " -> " << bd_out << "\n";
    });

    // ---- pretrain1 ----------------------------------------------------------
    auto* p1 = app.add_subcommand("pretrain1", "teacher-forced reconstruction training");
    std::string p1_dataset, p1_outdir, p1_resume;
    uint64_t p1_steps = 0;
    CommonOpts p1_common;
    add_common(p1, p1_common);
    p1->add_option("--dataset", p1_dataset, "training dataset (.pxds)")->required();
    p1->add_option("--out-dir", p1_outdir, "output directory")->required();
    p1->add_option("--steps", p1_steps, "train up to this absolute step (default: total_steps)");
    p1->add_option("--resume", p1_resume, "checkpoint to resume from");
    p1->callback([&]() {
        RunConfig cfg = make_config(p1_common);
        Dataset ds = read_dataset(p1_dataset);
        require_geo_matches(cfg, ds);
        fs::create_directories(p1_outdir);
        log_resolved(cfg, p1_outdir);

        Model<float> gen;
        AdamW<float> opt = cfg.make_adamw();
        uint64_t start_step = 0;
        if (!p1_resume.empty()) {
            LoadedCheckpoint ck = load_checkpoint(p1_resume);
            if (ck.state.stage != 1) throw DataError("resume checkpoint is not a stage-1 checkpoint");
            gen = std::move(ck.gen);
            if (ck.opt_gen) opt = std::move(*ck.opt_gen);
            else opt.attach(gen.params());
            cfg.configure(opt);  // the checkpoint has no hyperparameters
            start_step = ck.state.step;
        } else {
            gen.build(cfg.model, false);
            Rng init_rng(cfg.seed);
            gen.init_params(init_rng);
            opt.attach(gen.params());
        }
        const uint64_t until = p1_steps ? p1_steps : cfg.total_steps;
        MetricsWriter metrics(p1_outdir + "/metrics.csv", /*append=*/!p1_resume.empty());

        auto save = [&](uint64_t step, const std::string& name) {
            TrainState st;
            st.step = step;
            st.stage = 1;
            save_checkpoint(p1_outdir + "/" + name, gen, &opt, nullptr, nullptr, st);
        };
        StepMetrics last = run_stage1<float>(
            gen, opt, cfg.schedule, ds, cfg.batch_size, cfg.seed, start_step, until,
            [&](const StepMetrics& m) {
                if (cfg.log_every && m.step % cfg.log_every == 0) metrics.row(m);
                if (cfg.checkpoint_every && m.step % cfg.checkpoint_every == 0)
                    save(m.step, "stage1_step" + std::to_string(m.step) + ".pxck");
            });
        save(until, "stage1_final.pxck");
        std::cout << "stage1 done: step=" << until << " loss_rec=" << last.loss_rec << " -> "
                  << p1_outdir << "/stage1_final.pxck\n";
    });

    // ---- pretrain2 ----------------------------------------------------------
    auto* p2 = app.add_subcommand("pretrain2", "adversarial refinement training");
    std::string p2_dataset, p2_outdir, p2_ckpt, p2_resume;
    uint64_t p2_steps = 0;
    double p2_lambda_m = -1.0;
    CommonOpts p2_common;
    add_common(p2, p2_common);
    p2->add_option("--dataset", p2_dataset, "training dataset (.pxds)")->required();
    p2->add_option("--checkpoint", p2_ckpt, "stage-1 checkpoint to start from");
    p2->add_option("--out-dir", p2_outdir, "output directory")->required();
    p2->add_option("--steps", p2_steps, "number of adversarial steps (default: stage2.steps)");
    p2->add_option("--lambda-m", p2_lambda_m, "manual adversarial weight override");
    p2->add_option("--resume", p2_resume, "stage-2 checkpoint to resume from");
    p2->callback([&]() {
        RunConfig cfg = make_config(p2_common);
        if (p2_lambda_m >= 0.0) cfg.stage2.lambda_m = p2_lambda_m;
        Dataset ds = read_dataset(p2_dataset);
        require_geo_matches(cfg, ds);
        fs::create_directories(p2_outdir);
        log_resolved(cfg, p2_outdir);

        Model<float> gen, disc;
        AdamW<float> gopt = cfg.make_adamw(), dopt = cfg.make_adamw();
        Stage2State state;
        Rng rng(cfg.seed ^ 0x53544147453269ull);  // distinct stream from data order
        uint64_t start_step = 0;
        if (!p2_resume.empty()) {
            LoadedCheckpoint ck = load_checkpoint(p2_resume);
            if (ck.state.stage != 2 || !ck.disc) throw DataError("resume checkpoint is not a stage-2 checkpoint");
            gen = std::move(ck.gen);
            disc = std::move(*ck.disc);
            if (ck.opt_gen) gopt = std::move(*ck.opt_gen);
            else gopt.attach(gen.params());
            if (ck.opt_disc) dopt = std::move(*ck.opt_disc);
            else dopt.attach(disc.params());
            cfg.configure(gopt);  // the checkpoint has no hyperparameters
            cfg.configure(dopt);
            state.lambda_auto = ck.state.lambda_auto_prev;
            if (!ck.state.rng_state.empty()) rng.set_state(ck.state.rng_state);
            start_step = ck.state.step;
        } else {
            if (p2_ckpt.empty()) throw UsageError("pretrain2: --checkpoint (stage 1) required unless resuming");
            LoadedCheckpoint ck = load_checkpoint(p2_ckpt);
            gen = std::move(ck.gen);
            disc = discriminator_from(gen);
            gopt.attach(gen.params());
            dopt.attach(disc.params());
        }
        // the schedule stays frozen at its terminal learning rate
        const double lr = cfg.schedule.lr_at(cfg.schedule.total_steps);
        const uint64_t until = p2_steps ? p2_steps : cfg.stage2_steps;
        MetricsWriter metrics(p2_outdir + "/metrics_stage2.csv", /*append=*/!p2_resume.empty());

        auto save = [&](uint64_t step, const std::string& name) {
            TrainState st;
            st.step = step;
            st.stage = 2;
            st.lambda_auto_prev = state.lambda_auto;
            st.rng_state = rng.state();
            save_checkpoint(p2_outdir + "/" + name, gen, &gopt, &disc, &dopt, st);
        };
        StepMetrics last = run_stage2<float>(
            gen, disc, gopt, dopt, lr, ds, cfg.batch_size, cfg.seed, start_step, until, cfg.stage2,
            state, rng, [&](const StepMetrics& m) {
                if (cfg.log_every && m.step % cfg.log_every == 0) metrics.row(m);
                if (cfg.checkpoint_every && m.step % cfg.checkpoint_every == 0)
                    save(m.step, "stage2_step" + std::to_string(m.step) + ".pxck");
            });
        save(until, "stage2_final.pxck");
        std::cout << "stage2 done: step=" << until << " loss_rec=" << last.loss_rec
                  << " loss_pcaa=" << last.loss_pcaa << " disc_acc=" << last.disc_acc << " -> "
                  << p2_outdir << "/stage2_final.pxck\n";
    });

    // ---- generate -----------------------------------------------------------
    auto* gn = app.add_subcommand("generate", "render a prompt and continue it");
    std::string gn_ckpt, gn_atlas, gn_prompt, gn_prefix;
    int gn_steps = 8;
    CommonOpts gn_common;
    add_common(gn, gn_common);
    gn->add_option("--checkpoint", gn_ckpt, "model checkpoint")->required();
    gn->add_option("--atlas", gn_atlas, "bitmap font atlas");
    gn->add_option("--prompt", gn_prompt, "prompt text")->required();
    gn->add_option("--steps", gn_steps, "forward passes to run");
    gn->add_option("--out-prefix", gn_prefix, "write <prefix>_prompt.pbm, <prefix>_gen.pbm, <prefix>.txt");
    gn->callback([&]() {
        RunConfig cfg = make_config(gn_common);
        if (!gn_atlas.empty()) cfg.atlas_path = gn_atlas;
        if (cfg.atlas_path.empty()) throw UsageError("generate: --atlas or paths.atlas required");
        Atlas atlas = Atlas::load(cfg.atlas_path);
        LoadedCheckpoint ck = load_checkpoint(gn_ckpt);
        GenerationResult res = generate(ck.gen, atlas, gn_prompt, gn_steps);
        if (!gn_prefix.empty()) {
            write_pbm(gn_prefix + "_prompt.pbm", unpatchify(res.prompt_patches, ck.cfg.geo));
            write_pbm(gn_prefix + "_gen.pbm", unpatchify(res.generated_patches, ck.cfg.geo));
            std::ofstream txt(gn_prefix + ".txt");
            txt << res.recognized.text << "\n";
        }
        std::cout << res.recognized.text << "\n";
    });

    // ---- eval-gen -----------------------------------------------------------
    auto* eg = app.add_subcommand("eval-gen", "last-word generation accuracy on a task file");
    std::string eg_ckpt, eg_atlas, eg_vocab, eg_task, eg_csv;
    int eg_shots = 0;
    CommonOpts eg_common;
    add_common(eg, eg_common);
    eg->add_option("--checkpoint", eg_ckpt)->required();
    eg->add_option("--atlas", eg_atlas);
    eg->add_option("--vocab", eg_vocab);
    eg->add_option("--task", eg_task, "TSV: context<TAB>target")->required();
    eg->add_option("--shots", eg_shots, "few-shot demonstrations taken from the head of the file");
    eg->add_option("--csv", eg_csv, "append one result row to this CSV");
    eg->callback([&]() {
        RunConfig cfg = make_config(eg_common);
        if (!eg_atlas.empty()) cfg.atlas_path = eg_atlas;
        if (!eg_vocab.empty()) cfg.vocab_path = eg_vocab;
        if (cfg.atlas_path.empty() || cfg.vocab_path.empty())
            throw UsageError("eval-gen: atlas and vocab paths required");
        Atlas atlas = Atlas::load(cfg.atlas_path);
        Vocabulary vocab = Vocabulary::load(cfg.vocab_path);
        LoadedCheckpoint ck = load_checkpoint(eg_ckpt);
        auto items = load_gen_task(eg_task);
        GenEvalResult r = eg_shots > 0 ? eval_fewshot(ck.gen, atlas, items, eg_shots, vocab)
                                       : eval_lastword(ck.gen, atlas, items, vocab);
        std::cout << "accuracy=" << r.accuracy << " readability=" << r.readability
                  << " evaluated=" << r.evaluated << " skipped=" << r.skipped << "\n";
        if (!eg_csv.empty()) {
            const bool fresh = !std::ifstream(eg_csv).good();
            std::ofstream out(eg_csv, std::ios::app);
            if (fresh) out << "shots,accuracy,readability,evaluated,skipped\n";
            out << eg_shots << ',' << r.accuracy << ',' << r.readability << ',' << r.evaluated
                << ',' << r.skipped << "\n";
        }
    });

    // ---- eval-cls -----------------------------------------------------------
    auto* ec = app.add_subcommand("eval-cls", "frozen-backbone classification probe");
    std::string ec_ckpt, ec_atlas, ec_train, ec_val;
    int ec_classes = 2, ec_epochs = 200;
    double ec_lr = 0.05;
    CommonOpts ec_common;
    add_common(ec, ec_common);
    ec->add_option("--checkpoint", ec_ckpt)->required();
    ec->add_option("--atlas", ec_atlas);
    ec->add_option("--train", ec_train, "TSV: text_a[<TAB>text_b]<TAB>label")->required();
    ec->add_option("--val", ec_val, "TSV: same format")->required();
    ec->add_option("--classes", ec_classes);
    ec->add_option("--epochs", ec_epochs);
    ec->add_option("--lr", ec_lr);
    ec->callback([&]() {
        RunConfig cfg = make_config(ec_common);
        if (!ec_atlas.empty()) cfg.atlas_path = ec_atlas;
        if (cfg.atlas_path.empty()) throw UsageError("eval-cls: --atlas or paths.atlas required");
        Atlas atlas = Atlas::load(cfg.atlas_path);
        LoadedCheckpoint ck = load_checkpoint(ec_ckpt);
        FinetuneResult r = finetune_classifier(ck.gen, atlas, load_cls_task(ec_train),
                                               load_cls_task(ec_val), ec_classes, ec_epochs, ec_lr,
                                               cfg.seed);
        std::cout << "val_accuracy=" << r.val_accuracy << " epochs=" << r.epochs_ran << "\n";
    });

    // ---- attack -------------------------------------------------------------
    auto* at = app.add_subcommand("attack", "homoglyph-substitution robustness sweep");
    std::string at_ckpt, at_atlas, at_vocab, at_table, at_task, at_csv, at_ratios = "0,0.25,0.5";
    CommonOpts at_common;
    add_common(at, at_common);
    at->add_option("--checkpoint", at_ckpt)->required();
    at->add_option("--atlas", at_atlas);
    at->add_option("--vocab", at_vocab);
    at->add_option("--attack-table", at_table);
    at->add_option("--task", at_task, "TSV: context<TAB>target")->required();
    at->add_option("--ratios", at_ratios, "comma-separated substitution ratios");
    at->add_option("--csv", at_csv, "write the sweep table here");
    at->callback([&]() {
        RunConfig cfg = make_config(at_common);
        if (!at_atlas.empty()) cfg.atlas_path = at_atlas;
        if (!at_vocab.empty()) cfg.vocab_path = at_vocab;
        if (!at_table.empty()) cfg.attack_table_path = at_table;
        if (cfg.atlas_path.empty() || cfg.vocab_path.empty() || cfg.attack_table_path.empty())
            throw UsageError("attack: atlas, vocab and attack-table paths required");
        std::vector<double> ratios;
        std::istringstream rs(at_ratios);
        std::string tok;
        while (std::getline(rs, tok, ',')) {
            try {
                ratios.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw UsageError("attack: bad ratio '" + tok + "'");
            }
        }
        Atlas atlas = Atlas::load(cfg.atlas_path);
        Vocabulary vocab = Vocabulary::load(cfg.vocab_path);
        AttackTable table = AttackTable::load(cfg.attack_table_path);
        LoadedCheckpoint ck = load_checkpoint(at_ckpt);
        auto rows = attack_sweep(ck.gen, atlas, load_gen_task(at_task), table, ratios, cfg.seed, vocab);
        std::ostream* outp = &std::cout;
        std::ofstream file;
        if (!at_csv.empty()) {
            file.open(at_csv);
            if (!file) throw DataError("cannot open for write: " + at_csv);
            outp = &file;
        }
        *outp << "ratio,accuracy,readability,evaluated,skipped\n";
        for (const auto& r : rows)
            *outp << r.ratio << ',' << r.accuracy << ',' << r.readability << ',' << r.evaluated
                  << ',' << r.skipped << "\n";
    });

    // ---- attn ---------------------------------------------------------------
    auto* an = app.add_subcommand("attn", "attention heatmap over a prompt");
    std::string an_ckpt, an_atlas, an_prompt, an_prefix, an_layers = "all";
    CommonOpts an_common;
    add_common(an, an_common);
    an->add_option("--checkpoint", an_ckpt)->required();
    an->add_option("--atlas", an_atlas);
    an->add_option("--prompt", an_prompt)->required();
    an->add_option("--layers", an_layers, "'all' or 'last'")->check(CLI::IsMember({"all", "last"}));
    an->add_option("--out-prefix", an_prefix)->required();
    an->callback([&]() {
        RunConfig cfg = make_config(an_common);
        if (!an_atlas.empty()) cfg.atlas_path = an_atlas;
        if (cfg.atlas_path.empty()) throw UsageError("attn: --atlas or paths.atlas required");
        Atlas atlas = Atlas::load(cfg.atlas_path);
        LoadedCheckpoint ck = load_checkpoint(an_ckpt);
        auto files = attention_heatmap(ck.gen, atlas, an_prompt, an_layers == "last", an_prefix);
        for (const auto& f : files) std::cout << f << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "error: kind=usage msg=\"" << e.what() << "\"\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: kind=numeric msg=\"" << e.what() << "\"\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: kind=data msg=\"" << e.what() << "\"\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: kind=data msg=\"" << e.what() << "\"\n";
        return 2;
    }
}
