#include "pxlm/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "pxlm/common.hpp"

namespace pxlm {

namespace {

struct NamedTensor {
    std::string name;
    std::vector<int> dims;
    const float* data;
    size_t count;
};

void write_tensor_section(std::ostream& out, const std::vector<NamedTensor>& tensors) {
    write_le<uint32_t>(out, static_cast<uint32_t>(tensors.size()));
    uint64_t offset = 0;
    for (const auto& t : tensors) {
        write_str(out, t.name);
        write_le<uint8_t>(out, static_cast<uint8_t>(t.dims.size()));
        for (int d : t.dims) write_le<uint32_t>(out, static_cast<uint32_t>(d));
        write_le<uint64_t>(out, offset);
        offset += t.count * 4;
    }
    write_le<uint64_t>(out, offset);
    for (const auto& t : tensors)
        for (size_t i = 0; i < t.count; ++i) write_f32(out, t.data[i]);
}

struct ReadTensor {
    std::string name;
    std::vector<int> dims;
    std::vector<float> data;
};

std::map<std::string, ReadTensor> read_tensor_section(std::istream& in, const std::string& path) {
    const uint32_t count = read_le<uint32_t>(in, "tensor count");
    struct Entry {
        std::string name;
        std::vector<int> dims;
        uint64_t offset;
        size_t count;
    };
    std::vector<Entry> manifest;
    for (uint32_t i = 0; i < count; ++i) {
        Entry e;
        e.name = read_str(in, "tensor name");
        const uint8_t rank = read_le<uint8_t>(in, "tensor rank");
        size_t n = 1;
        for (uint8_t r = 0; r < rank; ++r) {
            e.dims.push_back(static_cast<int>(read_le<uint32_t>(in, "tensor dim")));
            n *= static_cast<size_t>(e.dims.back());
        }
        e.offset = read_le<uint64_t>(in, "tensor offset");
        e.count = n;
        manifest.push_back(std::move(e));
    }
    const uint64_t blob_len = read_le<uint64_t>(in, "blob length");
    std::vector<float> blob(blob_len / 4);
    for (auto& f : blob) f = read_f32(in, "tensor data");

    std::map<std::string, ReadTensor> out;
    for (auto& e : manifest) {
        if (e.offset % 4 != 0 || e.offset / 4 + e.count > blob.size())
            throw DataError(path + ": tensor '" + e.name + "' points outside the data blob");
        ReadTensor t;
        t.name = e.name;
        t.dims = e.dims;
        t.data.assign(blob.begin() + static_cast<long>(e.offset / 4),
                      blob.begin() + static_cast<long>(e.offset / 4 + e.count));
        out.emplace(t.name, std::move(t));
    }
    return out;
}

std::vector<NamedTensor> model_tensors(const Model<float>& m, const std::string& prefix) {
    std::vector<NamedTensor> out;
    for (const auto* p : m.params())
        out.push_back({prefix + p->name, p->dims, p->w.data(), p->size()});
    return out;
}

std::vector<NamedTensor> opt_tensors(Model<float>& m, AdamW<float>& opt, const std::string& prefix) {
    std::vector<NamedTensor> out;
    auto params = m.params();
    for (size_t i = 0; i < params.size(); ++i) {
        out.push_back({prefix + params[i]->name + ".m", params[i]->dims, opt.m()[i].data(),
                       opt.m()[i].size()});
        out.push_back({prefix + params[i]->name + ".v", params[i]->dims, opt.v()[i].data(),
                       opt.v()[i].size()});
    }
    return out;
}

void load_model_weights(Model<float>& m, std::map<std::string, ReadTensor>& tensors,
                        const std::string& prefix, const std::string& path) {
    for (auto* p : m.params()) {
        auto it = tensors.find(prefix + p->name);
        if (it == tensors.end()) throw DataError(path + ": missing tensor " + prefix + p->name);
        if (it->second.data.size() != p->size())
            throw DataError(path + ": size mismatch for " + prefix + p->name);
        std::copy(it->second.data.begin(), it->second.data.end(), p->w.begin());
    }
}

}  // namespace

void save_checkpoint(const std::string& path, const Model<float>& gen,
                     const AdamW<float>* opt_gen, const Model<float>* disc,
                     const AdamW<float>* opt_disc, const TrainState& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for write: " + path);
    out.write("PXCK", 4);
    write_le<uint32_t>(out, 1);

    std::ostringstream cfg;
    cfg.precision(17);
    cfg << gen.cfg.to_kv();
    cfg << "step=" << state.step << "\nstage=" << state.stage
        << "\nlambda_auto_prev=" << state.lambda_auto_prev << "\nhas_disc=" << (disc ? 1 : 0)
        << "\nhas_opt=" << (opt_gen ? 1 : 0) << "\n";
    if (opt_gen) cfg << "opt_gen_t=" << opt_gen->t << "\n";
    if (opt_disc) cfg << "opt_disc_t=" << opt_disc->t << "\n";
    write_str(out, cfg.str());

    auto tensors = model_tensors(gen, "gen.");
    if (disc) {
        auto dt = model_tensors(*disc, "disc.");
        tensors.insert(tensors.end(), dt.begin(), dt.end());
    }
    write_tensor_section(out, tensors);

    std::vector<NamedTensor> opt;
    if (opt_gen)
        for (auto& t : opt_tensors(const_cast<Model<float>&>(gen), const_cast<AdamW<float>&>(*opt_gen), "gen."))
            opt.push_back(t);
    if (opt_disc && disc)
        for (auto& t : opt_tensors(const_cast<Model<float>&>(*disc), const_cast<AdamW<float>&>(*opt_disc), "disc."))
            opt.push_back(t);
    write_tensor_section(out, opt);

    write_str(out, state.rng_state);
    if (!out) throw DataError("write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[4];
    read_bytes(in, magic, 4, "checkpoint magic");
    if (std::string(magic, 4) != "PXCK") throw DataError(path + ": bad magic (not a PXCK file)");
    const uint32_t version = read_le<uint32_t>(in, "checkpoint version");
    if (version != 1) throw DataError(path + ": unsupported version " + std::to_string(version));

    std::map<std::string, std::string> kv;
    {
        std::istringstream cfg(read_str(in, "config block"));
        std::string line;
        while (std::getline(cfg, line)) {
            const auto eq = line.find('=');
            if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
        }
    }
    LoadedCheckpoint ck;
    ck.cfg = ModelConfig::from_kv(kv);
    ck.state.step = kv.count("step") ? std::stoull(kv.at("step")) : 0;
    ck.state.stage = kv.count("stage") ? std::stoi(kv.at("stage")) : 1;
    ck.state.lambda_auto_prev =
        kv.count("lambda_auto_prev") ? std::stod(kv.at("lambda_auto_prev")) : 1.0;
    const bool has_disc = kv.count("has_disc") && kv.at("has_disc") == "1";
    const bool has_opt = kv.count("has_opt") && kv.at("has_opt") == "1";

    auto tensors = read_tensor_section(in, path);
    ck.gen.build(ck.cfg, false);
    load_model_weights(ck.gen, tensors, "gen.", path);
    if (has_disc) {
        ck.disc.emplace();
        ck.disc->build(ck.cfg, true);
        load_model_weights(*ck.disc, tensors, "disc.", path);
    }

    auto opt = read_tensor_section(in, path);
    if (has_opt) {
        auto restore = [&](Model<float>& m, AdamW<float>& o, const std::string& prefix, uint64_t t) {
            auto params = m.params();
            o.attach(params);
            o.t = t;
            for (size_t i = 0; i < params.size(); ++i) {
                auto im = opt.find(prefix + params[i]->name + ".m");
                auto iv = opt.find(prefix + params[i]->name + ".v");
                if (im == opt.end() || iv == opt.end())
                    throw DataError(path + ": missing optimizer slots for " + params[i]->name);
                o.m()[i] = im->second.data;
                o.v()[i] = iv->second.data;
            }
        };
        ck.opt_gen.emplace();
        restore(ck.gen, *ck.opt_gen, "gen.", kv.count("opt_gen_t") ? std::stoull(kv.at("opt_gen_t")) : 0);
        if (has_disc) {
            ck.opt_disc.emplace();
            restore(*ck.disc, *ck.opt_disc, "disc.",
                    kv.count("opt_disc_t") ? std::stoull(kv.at("opt_disc_t")) : 0);
        }
    }
    ck.state.rng_state = read_str(in, "rng state");
    return ck;
}

}  // namespace pxlm
