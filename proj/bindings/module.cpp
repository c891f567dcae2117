// Python bindings for the main operations: rendering, recognition, corpus
// segmentation, homoglyph attacks, the two training-balance formulas, and
// generation from a saved checkpoint. The heavy lifting stays in the C++
// library; this file only translates types.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pxlm/atlas.hpp"
#include "pxlm/checkpoint.hpp"
#include "pxlm/corpus.hpp"
#include "pxlm/infer.hpp"
#include "pxlm/model.hpp"
#include "pxlm/optim.hpp"
#include "pxlm/render.hpp"
#include "pxlm/utf8.hpp"

namespace py = pybind11;
using namespace pxlm;

namespace {

// Strip -> (width, height, row-major bytes of 0/1)
py::tuple strip_to_py(const Strip& s) {
    return py::make_tuple(s.width, Strip::kHeight,
                          py::bytes(reinterpret_cast<const char*>(s.px.data()), s.px.size()));
}

Strip strip_from_py(int width, const py::bytes& data) {
    std::string raw = data;
    if (width < 0 || raw.size() != static_cast<size_t>(width) * Strip::kHeight)
        throw DataError("strip bytes must be width * 8 long");
    Strip s;
    s.width = width;
    s.px.assign(raw.begin(), raw.end());
    return s;
}

// A loaded checkpoint plus the pieces needed to run it.
struct PyCheckpoint {
    LoadedCheckpoint ck;

    explicit PyCheckpoint(const std::string& path) : ck(load_checkpoint(path)) {}
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "pixel language model core operations";

    py::register_exception<UsageError>(m, "UsageError");
    py::register_exception<DataError>(m, "DataError");
    py::register_exception<NumericError>(m, "NumericError");

    py::class_<Atlas>(m, "Atlas")
        .def_static("load", &Atlas::load, py::arg("path"))
        .def_property_readonly("height", [](const Atlas& a) { return a.height; })
        .def_property_readonly("gap", [](const Atlas& a) { return a.gap; })
        .def_property_readonly("space", [](const Atlas& a) { return a.space; })
        .def("__len__", [](const Atlas& a) { return a.glyphs.size(); })
        .def("coverage",
             [](const Atlas& a) {
                 std::vector<std::string> out;
                 for (const auto& [cp, g] : a.glyphs) out.push_back(utf8_encode({cp}));
                 return out;
             })
        .def("render",
             [](const Atlas& a, const std::string& text) {
                 return strip_to_py(render_text(a, utf8_decode(text)));
             },
             py::arg("text"),
             "Render text to (width, height, bytes) with one 0/1 byte per pixel.")
        .def("recognize",
             [](const Atlas& a, int width, const py::bytes& pixels) {
                 Recognition r = recognize(strip_from_py(width, pixels), a);
                 return py::make_tuple(r.text, r.run_distances);
             },
             py::arg("width"), py::arg("pixels"),
             "Template-match a strip back to (text, per-glyph distances).");

    py::class_<AttackTable>(m, "AttackTable")
        .def_static("load", &AttackTable::load, py::arg("path"))
        .def("apply",
             [](const AttackTable& t, const std::string& text, double ratio, uint64_t seed) {
                 Rng rng(seed);
                 return utf8_encode(apply_visual_attack(utf8_decode(text), t, ratio, rng));
             },
             py::arg("text"), py::arg("ratio"), py::arg("seed"),
             "Replace round(ratio * letters) letters with homoglyphs, deterministically.");

    m.def(
        "segment_text",
        [](const std::string& text, size_t l_max, size_t l_min) {
            return segment_text(text, SegmenterConfig{l_max, l_min});
        },
        py::arg("text"), py::arg("l_max") = 1180, py::arg("l_min") = 100,
        "Split text into sentences and greedily pack them into samples.");

    m.def(
        "lr_at",
        [](double lr_max, double lr_min, uint64_t warmup, uint64_t total, uint64_t step) {
            return Schedule{lr_max, lr_min, warmup, total}.lr_at(step);
        },
        py::arg("lr_max"), py::arg("lr_min"), py::arg("warmup_steps"), py::arg("total_steps"),
        py::arg("step"), "Cosine learning-rate schedule with linear warmup.");

    m.def("lambda_auto", &lambda_auto, py::arg("scale_rec"), py::arg("scale_pcaa"),
          py::arg("delta") = 1e-8,
          "Automatic balance factor between reconstruction and adversarial gradients.");

    m.def(
        "init_checkpoint",
        [](const std::string& path, int layers, int d_model, int heads, int d_ff, int window,
           uint64_t seed) {
            ModelConfig cfg;
            cfg.n_layers = layers;
            cfg.d_model = d_model;
            cfg.n_heads = heads;
            cfg.d_ff = d_ff;
            cfg.window = window;
            cfg.validate();
            Model<float> gen;
            gen.build(cfg);
            Rng rng(seed);
            gen.init_params(rng);
            save_checkpoint(path, gen, nullptr, nullptr, nullptr, TrainState{});
            return count_params(cfg);
        },
        py::arg("path"), py::arg("layers") = 2, py::arg("d_model") = 16, py::arg("heads") = 2,
        py::arg("d_ff") = 32, py::arg("window") = 64, py::arg("seed") = 0,
        "Write a freshly initialized (untrained) model checkpoint; returns its parameter count.");

    py::class_<PyCheckpoint>(m, "Checkpoint")
        .def(py::init<const std::string&>(), py::arg("path"))
        .def_property_readonly("step", [](const PyCheckpoint& c) { return c.ck.state.step; })
        .def_property_readonly("stage", [](const PyCheckpoint& c) { return c.ck.state.stage; })
        .def_property_readonly("window", [](const PyCheckpoint& c) { return c.ck.cfg.window; })
        .def_property_readonly("params",
                               [](const PyCheckpoint& c) { return count_params(c.ck.cfg); })
        .def("generate",
             [](PyCheckpoint& c, const Atlas& atlas, const std::string& prompt, int steps) {
                 GenerationResult r = generate(c.ck.gen, atlas, prompt, steps);
                 Strip strip = unpatchify(r.generated_patches, c.ck.cfg.geo);
                 py::dict out;
                 out["text"] = r.recognized.text;
                 out["pixels"] = strip_to_py(strip);
                 out["patches"] = r.generated_patches.size();
                 return out;
             },
             py::arg("atlas"), py::arg("prompt"), py::arg("steps") = 8,
             "Greedy pixel generation; returns recognized text and the raw strip.");

    m.attr("__version__") = "0.1.0";
}
