#include "pxlm/runconfig.hpp"

#include <fstream>
#include <sstream>

namespace pxlm {

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

uint64_t to_u64(const std::string& v, const std::string& key) {
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw UsageError("config: bad unsigned integer for " + key + ": '" + v + "'");
    }
}
int to_int(const std::string& v, const std::string& key) {
    try {
        return std::stoi(v);
    } catch (const std::exception&) {
        throw UsageError("config: bad integer for " + key + ": '" + v + "'");
    }
}
double to_double(const std::string& v, const std::string& key) {
    try {
        return std::stod(v);
    } catch (const std::exception&) {
        throw UsageError("config: bad number for " + key + ": '" + v + "'");
    }
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    // root
    if (key == "seed") { seed = to_u64(value, key); return; }
    // [model]
    if (key == "model.layers") { model.n_layers = to_int(value, key); return; }
    if (key == "model.d_model") { model.d_model = to_int(value, key); return; }
    if (key == "model.heads") { model.n_heads = to_int(value, key); return; }
    if (key == "model.d_ff") { model.d_ff = to_int(value, key); return; }
    if (key == "model.window") { model.window = to_int(value, key); return; }
    if (key == "model.channels") { model.geo.C = to_int(value, key); return; }
    if (key == "model.patches_per_step") { model.geo.L = to_int(value, key); return; }
    if (key == "model.rmsnorm_eps") { model.rmsnorm_eps = to_double(value, key); return; }
    if (key == "model.rope_base") { model.rope_base = to_double(value, key); return; }
    if (key == "model.sigmoid_temp") { model.sigmoid_temp = to_double(value, key); return; }
    if (key == "model.decode_threshold") { model.decode_threshold = to_double(value, key); return; }
    // [train]
    if (key == "train.batch_size") { batch_size = to_u64(value, key); return; }
    if (key == "train.total_steps") {
        total_steps = to_u64(value, key);
        schedule.total_steps = total_steps;
        return;
    }
    if (key == "train.checkpoint_every") { checkpoint_every = to_u64(value, key); return; }
    if (key == "train.log_every") { log_every = to_u64(value, key); return; }
    if (key == "train.warmup_steps") { schedule.warmup_steps = to_u64(value, key); return; }
    if (key == "train.lr_max") { schedule.lr_max = to_double(value, key); return; }
    if (key == "train.lr_min") { schedule.lr_min = to_double(value, key); return; }
    if (key == "train.beta1") { beta1 = to_double(value, key); return; }
    if (key == "train.beta2") { beta2 = to_double(value, key); return; }
    if (key == "train.adam_eps") { adam_eps = to_double(value, key); return; }
    if (key == "train.weight_decay") { weight_decay = to_double(value, key); return; }
    // [stage2]
    if (key == "stage2.lambda_m") { stage2.lambda_m = to_double(value, key); return; }
    if (key == "stage2.delta") { stage2.delta = to_double(value, key); return; }
    if (key == "stage2.fake_samples") { stage2.fake_samples = to_int(value, key); return; }
    if (key == "stage2.steps") { stage2_steps = to_u64(value, key); return; }
    // [segment]
    if (key == "segment.l_max") { segmenter.l_max = to_u64(value, key); return; }
    if (key == "segment.l_min") { segmenter.l_min = to_u64(value, key); return; }
    // [paths]
    if (key == "paths.atlas") { atlas_path = value; return; }
    if (key == "paths.vocab") { vocab_path = value; return; }
    if (key == "paths.attack_table") { attack_table_path = value; return; }
    throw UsageError("config: unknown key '" + key + "'");
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file: " + path);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw UsageError(path + ":" + std::to_string(line_no) + ": unterminated [section]");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(path + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw UsageError(path + ":" + std::to_string(line_no) + ": empty key");
        set(section.empty() ? key : section + "." + key, value);
    }
}

std::string RunConfig::resolved() const {
    std::ostringstream ss;
    ss.precision(17);
    ss << "seed = " << seed << "\n\n[model]\n"
       << "layers = " << model.n_layers << "\nd_model = " << model.d_model
       << "\nheads = " << model.n_heads << "\nd_ff = " << model.d_ff
       << "\nwindow = " << model.window << "\nchannels = " << model.geo.C
       << "\npatches_per_step = " << model.geo.L << "\nrmsnorm_eps = " << model.rmsnorm_eps
       << "\nrope_base = " << model.rope_base << "\nsigmoid_temp = " << model.sigmoid_temp
       << "\ndecode_threshold = " << model.decode_threshold << "\n\n[train]\n"
       << "batch_size = " << batch_size << "\ntotal_steps = " << total_steps
       << "\ncheckpoint_every = " << checkpoint_every << "\nlog_every = " << log_every
       << "\nwarmup_steps = " << schedule.warmup_steps << "\nlr_max = " << schedule.lr_max
       << "\nlr_min = " << schedule.lr_min << "\nbeta1 = " << beta1 << "\nbeta2 = " << beta2
       << "\nadam_eps = " << adam_eps << "\nweight_decay = " << weight_decay << "\n\n[stage2]\n"
       << "lambda_m = " << stage2.lambda_m << "\ndelta = " << stage2.delta
       << "\nfake_samples = " << stage2.fake_samples << "\nsteps = " << stage2_steps
       << "\n\n[segment]\n"
       << "l_max = " << segmenter.l_max << "\nl_min = " << segmenter.l_min << "\n\n[paths]\n"
       << "atlas = " << atlas_path << "\nvocab = " << vocab_path
       << "\nattack_table = " << attack_table_path << "\n";
    return ss.str();
}

}  // namespace pxlm
