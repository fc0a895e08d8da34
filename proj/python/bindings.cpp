#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "neolus/error.hpp"
#include "neolus/ingestion.hpp"
#include "neolus/manifest.hpp"
#include "neolus/metrics.hpp"
#include "neolus/phantom.hpp"
#include "neolus/pooling.hpp"
#include "neolus/split.hpp"
#include "neolus/training.hpp"

namespace py = pybind11;
using namespace neolus;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::span<const double> as_span(const DoubleArray& a) {
  if (a.ndim() != 1) throw ArgumentError("expected a 1-D array");
  return {a.data(), static_cast<std::size_t>(a.size())};
}

FeatureMap to_feature_map(const DoubleArray& a) {
  if (a.ndim() != 3) throw ArgumentError("expected a C x H x W array");
  FeatureMap f(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
  std::copy_n(a.data(), f.values.size(), f.values.begin());
  return f;
}

py::array_t<double> to_array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

py::array_t<std::uint8_t> to_array(const GrayImage& img) {
  py::array_t<std::uint8_t> out({img.height, img.width});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "SF prediction from lung-ultrasound frames: metrics, pooling, phantom and splits";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      error(("kind=" + e.kind() + " msg=" + e.what()).c_str());
    }
  });

  m.def("spearman", [](const DoubleArray& x, const DoubleArray& y) { return spearman(as_span(x), as_span(y)); },
        py::arg("x"), py::arg("y"));
  m.def("mape", [](const DoubleArray& p, const DoubleArray& t) { return mape(as_span(p), as_span(t)); },
        py::arg("pred"), py::arg("target"));
  m.def("average_ranks", [](const DoubleArray& v) { return to_array(average_ranks(as_span(v))); }, py::arg("values"));
  m.def("clip_and_normalize_sf", &clip_and_normalize_sf, py::arg("sf"), py::arg("clip") = 450.0,
        py::arg("norm") = 450.0);
  m.def("select_frame_indices", &select_frame_indices, py::arg("frame_count"), py::arg("k"));

  m.def("position_preserving_pool",
        [](const DoubleArray& a) {
          const FeatureMap f = to_feature_map(a);
          const auto v = position_preserving_pool(f);
          return py::array_t<double>({f.channels, f.width}, v.data());
        },
        py::arg("feature_map"));
  m.def("global_average_pool", [](const DoubleArray& a) { return to_array(global_average_pool(to_feature_map(a))); },
        py::arg("feature_map"));

  m.def("generate_frame",
        [](double severity, std::uint64_t seed) {
          Rng rng(seed);
          return to_array(generate_frame(severity, rng).pixels);
        },
        py::arg("severity"), py::arg("seed"));
  m.def("phantom_sf",
        [](double severity, std::uint64_t seed) {
          Rng rng(seed);
          return phantom_sf(severity, rng);
        },
        py::arg("severity"), py::arg("seed"));
  m.def("generate_dataset",
        [](const std::string& spec_json, const std::string& out_dir) {
          const auto ds = generate_dataset(phantom_spec_from_json(spec_json), out_dir);
          return render_summary(ds.manifest.summary());
        },
        py::arg("spec_json"), py::arg("out_dir"));

  m.def("manifest_summary", [](const std::string& path) { return render_summary(load_manifest(path).summary()); },
        py::arg("manifest_path"));
  m.def("make_split",
        [](const std::string& manifest_path, std::uint64_t seed, const std::string& scheme) {
          return split_to_json(make_split(load_manifest(manifest_path), seed, parse_scheme(scheme)));
        },
        py::arg("manifest_path"), py::arg("seed"), py::arg("scheme") = "kfold:5");
  m.def("report_json",
        [](const std::string& predictions_csv, double sf_clip, double sf_norm) {
          const auto p = load_predictions(predictions_csv);
          return report_to_json(compute_report(p, infer_task(p), {sf_clip, sf_norm}));
        },
        py::arg("predictions_csv"), py::arg("sf_clip") = 450.0, py::arg("sf_norm") = 450.0);
}
