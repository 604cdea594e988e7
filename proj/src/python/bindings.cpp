#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "melanet/benchmark.hpp"
#include "melanet/clf/focal.hpp"
#include "melanet/errors.hpp"
#include "melanet/gan/losses.hpp"
#include "melanet/image.hpp"
#include "melanet/metrics/metrics.hpp"
#include "melanet/pipeline/runner.hpp"

namespace py = pybind11;

namespace {

melanet::ImageTensor image_from_array(const py::array_t<float>& array, const std::string& tag) {
    auto buf = array.request();
    if (buf.ndim != 3) throw melanet::DataError("image array must be H x W x C");
    melanet::ImageTensor img(static_cast<int>(buf.shape[0]), static_cast<int>(buf.shape[1]),
                             static_cast<int>(buf.shape[2]),
                             melanet::range_tag_from_name(tag));
    auto view = array.unchecked<3>();
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) img.at(y, x, c) = view(y, x, c);
    return img;
}

py::array_t<float> image_to_array(const melanet::ImageTensor& img) {
    py::array_t<float> out({img.height, img.width, img.channels});
    auto view = out.mutable_unchecked<3>();
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) view(y, x, c) = img.at(y, x, c);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "imbalance-aware two-stage lesion classification pipeline";

    py::register_exception<melanet::ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<melanet::DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<melanet::TrainingError>(m, "TrainingError", PyExc_RuntimeError);
    py::register_exception<melanet::EvalError>(m, "EvalError", PyExc_RuntimeError);

    m.def(
        "focal_loss",
        [](double p, int y, double alpha, double gamma) {
            melanet::clf::FocalLossParams params{alpha, gamma};
            params.validate();
            return melanet::clf::focal_loss(p, y, params);
        },
        py::arg("p"), py::arg("y"), py::arg("alpha") = 0.25, py::arg("gamma") = 2.0);
    m.def(
        "focal_loss_batch",
        [](const std::vector<double>& p, const std::vector<int>& y, double alpha, double gamma) {
            melanet::clf::FocalLossParams params{alpha, gamma};
            params.validate();
            return melanet::clf::focal_loss_batch(p, y, params);
        },
        py::arg("p"), py::arg("y"), py::arg("alpha") = 0.25, py::arg("gamma") = 2.0);

    m.def(
        "standardize",
        [](const py::array_t<float>& image) {
            return image_to_array(melanet::standardize(image_from_array(image, "raw_0_255")));
        },
        py::arg("image"), "Per-sample min-max rescale of raw pixels to [0,1].");
    m.def(
        "pad_and_resize",
        [](const py::array_t<float>& image, int side, const std::string& range_tag) {
            return image_to_array(
                melanet::pad_and_resize(image_from_array(image, range_tag), side));
        },
        py::arg("image"), py::arg("side"), py::arg("range_tag") = "raw_0_255");

    py::class_<melanet::metrics::ConfusionCounts>(m, "ConfusionCounts")
        .def_readonly("tp", &melanet::metrics::ConfusionCounts::tp)
        .def_readonly("fp", &melanet::metrics::ConfusionCounts::fp)
        .def_readonly("tn", &melanet::metrics::ConfusionCounts::tn)
        .def_readonly("fn", &melanet::metrics::ConfusionCounts::fn)
        .def("__repr__", [](const melanet::metrics::ConfusionCounts& c) {
            return "ConfusionCounts(tp=" + std::to_string(c.tp) + ", fp=" + std::to_string(c.fp) +
                   ", tn=" + std::to_string(c.tn) + ", fn=" + std::to_string(c.fn) + ")";
        });

    m.def("confusion", &melanet::metrics::confusion, py::arg("labels"), py::arg("predictions"));
    m.def("sensitivity", &melanet::metrics::sensitivity, py::arg("counts"));
    m.def(
        "roc_curve",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            auto curve = melanet::metrics::roc_curve(scores, labels);
            std::vector<std::tuple<double, double, double>> out;
            out.reserve(curve.points.size());
            for (const auto& p : curve.points) out.emplace_back(p.fpr, p.tpr, p.threshold);
            return out;
        },
        py::arg("scores"), py::arg("labels"));
    m.def(
        "auc",
        [](const std::vector<double>& scores, const std::vector<int>& labels) {
            return melanet::metrics::auc(melanet::metrics::roc_curve(scores, labels));
        },
        py::arg("scores"), py::arg("labels"));

    m.def(
        "generate_benchmark",
        [](const std::filesystem::path& out_dir, int image_side, int n_majority, int n_minority,
           double domain_gap, uint64_t seed) {
            melanet::BenchmarkConfig cfg{image_side, n_majority, n_minority, domain_gap, seed};
            melanet::pipeline::generate_benchmark_dirs(cfg, out_dir);
        },
        py::arg("out_dir"), py::arg("image_side") = 64, py::arg("n_majority") = 400,
        py::arg("n_minority") = 100, py::arg("domain_gap") = 0.5, py::arg("seed") = 0,
        "Write a synthetic two-class benchmark as train/ and test/ snapshots.");

    m.def(
        "run_pipeline",
        [](const std::filesystem::path& config_path, const std::string& mode,
           std::optional<uint64_t> seed, const std::string& out_dir) {
            melanet::pipeline::CliOverrides overrides;
            if (!mode.empty()) overrides.mode = mode;
            if (seed) overrides.seed = *seed;
            if (!out_dir.empty()) overrides.out_dir = out_dir;
            auto cfg = melanet::pipeline::ExperimentConfig::load(config_path, overrides);
            auto report = melanet::pipeline::run_pipeline(cfg);
            py::dict out;
            out["auc"] = report.auc;
            out["sensitivity"] = report.sensitivity;
            out["tp"] = report.counts.tp;
            out["fp"] = report.counts.fp;
            out["tn"] = report.counts.tn;
            out["fn"] = report.counts.fn;
            out["out_dir"] = cfg.out_dir.string();
            return out;
        },
        py::arg("config_path"), py::arg("mode") = "", py::arg("seed") = std::nullopt,
        py::arg("out_dir") = "", "Run the full pipeline; returns the headline metrics.");

    m.def(
        "run_stage",
        [](const std::filesystem::path& config_path, const std::string& stage,
           const std::string& mode, std::optional<uint64_t> seed, const std::string& out_dir) {
            melanet::pipeline::CliOverrides overrides;
            if (!mode.empty()) overrides.mode = mode;
            if (seed) overrides.seed = *seed;
            if (!out_dir.empty()) overrides.out_dir = out_dir;
            auto cfg = melanet::pipeline::ExperimentConfig::load(config_path, overrides);
            melanet::pipeline::run_stage(cfg, melanet::pipeline::stage_from_name(stage));
        },
        py::arg("config_path"), py::arg("stage"), py::arg("mode") = "",
        py::arg("seed") = std::nullopt, py::arg("out_dir") = "");

    m.attr("__version__") = "0.1.0";
}
