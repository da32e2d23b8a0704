#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "facex/aggregation.hpp"
#include "facex/commands.hpp"
#include "facex/error.hpp"
#include "facex/evaluation.hpp"
#include "facex/patches.hpp"
#include "facex/rendering.hpp"

namespace py = pybind11;
using namespace facex;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

template <class T, class A>
Grid<T> to_grid(const A& array, const char* what) {
  if (array.ndim() != 2) throw Error(Errc::invalid_dimensions, std::string(what) + " must be a 2-D array");
  Grid<T> grid(static_cast<int>(array.shape(0)), static_cast<int>(array.shape(1)));
  std::copy(array.data(), array.data() + array.size(), grid.values.begin());
  return grid;
}

std::vector<std::optional<double>> sample_ior_py(const FloatArray& attribution, const LabelArray& mask,
                                                 std::size_t region_count) {
  return sample_ior(to_grid<float>(attribution, "attribution"), to_grid<Label>(mask, "mask"), region_count).values;
}

py::array_t<double> score_patches_py(const FloatArray& attribution, const LabelArray& mask, int patch_size,
                                     Label region, std::size_t region_count) {
  const auto g = to_grid<float>(attribution, "attribution");
  const auto m = to_grid<Label>(mask, "mask");
  const PatchGrid grid(m.height, m.width, patch_size);
  const auto scores = score_patches(g, m, grid, region, region_count);
  py::array_t<double> out({grid.rows(), grid.cols()});
  std::copy(scores.begin(), scores.end(), out.mutable_data());
  return out;
}

py::list records_py(const TopKSet& set) {
  py::list out;
  for (const auto& r : set.records) {
    py::dict d;
    d["sample_id"] = r.sample_id;
    d["sample_index"] = r.sample_index;
    d["patch_index"] = r.patch_index;
    d["score"] = r.score;
    d["bbox"] = py::make_tuple(r.bbox.row, r.bbox.col, r.bbox.height, r.bbox.width);
    out.append(std::move(d));
  }
  return out;
}

py::tuple run_command(const std::string& name, const RunConfig& config) {
  using Command = int (*)(const RunConfig&, std::ostream&, std::ostream&);
  static const std::map<std::string, Command> commands = {
      {"validate", cmd_validate}, {"subset", cmd_subset}, {"aggregate", cmd_aggregate},
      {"patches", cmd_patches},   {"rank", cmd_rank},     {"render", cmd_render},
      {"report", cmd_report},     {"pipeline", cmd_pipeline}};
  auto it = commands.find(name);
  if (it == commands.end()) throw Error(Errc::invalid_argument, "unknown command '" + name + "'");
  std::ostringstream out, err;
  int code = 0;
  {
    py::gil_scoped_release release;
    code = it->second(config, out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_facex, m) {
  m.doc() = "Region attribution summaries for face attribute classifiers";

  static py::handle error_type = py::exception<Error>(m, "FacexError", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error_type(std::string(e.what()));
      exc.attr("code") = std::string(to_string(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::enum_<Normalization>(m, "Normalization")
      .value("relative", Normalization::relative)
      .value("absolute", Normalization::absolute);

  py::class_<RegionTable>(m, "RegionTable")
      .def(py::init<std::vector<std::string>>())
      .def_static("face_parsing_default", &RegionTable::face_parsing_default)
      .def("__len__", &RegionTable::size)
      .def("name", &RegionTable::name)
      .def("at", &RegionTable::at)
      .def_property_readonly("names", [](const RegionTable& t) {
        return std::vector<std::string>(t.names().begin(), t.names().end());
      });

  py::class_<SampleRecord>(m, "SampleRecord")
      .def_readonly("id", &SampleRecord::id)
      .def_readonly("image_path", &SampleRecord::image_path)
      .def_readonly("attribution_path", &SampleRecord::attribution_path)
      .def_readonly("mask_path", &SampleRecord::mask_path)
      .def_readonly("attributes", &SampleRecord::attributes)
      .def_readonly("label", &SampleRecord::label)
      .def_readonly("prediction", &SampleRecord::prediction);

  py::class_<Manifest>(m, "Manifest")
      .def_readonly("height", &Manifest::height)
      .def_readonly("width", &Manifest::width)
      .def_readonly("region_table", &Manifest::region_table)
      .def_readonly("samples", &Manifest::samples)
      .def_readonly("base_dir", &Manifest::base_dir)
      .def("document", &manifest_document)
      .def("hash", &manifest_hash);

  m.def("read_manifest", &read_manifest, py::arg("path"));
  m.def("write_manifest", &write_manifest, py::arg("manifest"), py::arg("path"));
  m.def("balance_subset", &balance_subset, py::arg("manifest"), py::arg("target"), py::arg("attribute"),
        py::arg("seed") = 0);
  m.def(
      "load_attribution",
      [](const Manifest& manifest, std::size_t i) {
        const auto g = load_attribution(manifest.samples.at(i), manifest);
        py::array_t<float> out({g.height, g.width});
        std::copy(g.values.begin(), g.values.end(), out.mutable_data());
        return out;
      },
      py::arg("manifest"), py::arg("index"));
  m.def(
      "load_mask",
      [](const Manifest& manifest, std::size_t i) {
        const auto g = load_mask(manifest.samples.at(i), manifest);
        py::array_t<std::uint8_t> out({g.height, g.width});
        std::copy(g.values.begin(), g.values.end(), out.mutable_data());
        return out;
      },
      py::arg("manifest"), py::arg("index"));

  m.def("sample_ior", &sample_ior_py, py::arg("attribution"), py::arg("mask"), py::arg("region_count") = 19,
        "Per-label IoR of one sample; None for regions absent from the mask.");
  m.def("score_patches", &score_patches_py, py::arg("attribution"), py::arg("mask"), py::arg("patch_size"),
        py::arg("region"), py::arg("region_count") = 19);

  py::class_<RegionStat>(m, "RegionStat")
      .def_readonly("ior", &RegionStat::ior_mean)
      .def_readonly("count", &RegionStat::count);

  py::class_<IoRSummary>(m, "Summary")
      .def_readonly("class_of_interest", &IoRSummary::class_of_interest)
      .def_readonly("sample_count", &IoRSummary::sample_count)
      .def_readonly("region_table", &IoRSummary::region_table)
      .def_readonly("per_region", &IoRSummary::per_region)
      .def_readonly("manifest_hash", &IoRSummary::manifest_hash)
      .def("document", &summary_document)
      .def(
          "ranking",
          [](const IoRSummary& s, bool include_background) {
            std::vector<std::tuple<std::string, double, std::size_t>> out;
            for (const auto& r : rank_regions(s, include_background).ranked) {
              out.emplace_back(s.region_table.name(r.region), r.ior, r.count);
            }
            return out;
          },
          py::arg("include_background") = false);

  m.def("parse_summary", &parse_summary_document, py::arg("text"));
  m.def(
      "aggregate",
      [](const Manifest& manifest, const std::string& class_of_interest, std::size_t workers) {
        RunConfig config;
        config.class_of_interest = class_of_interest;
        config.workers = workers;
        py::gil_scoped_release release;
        return analyze(manifest, config, {}).summary;
      },
      py::arg("manifest"), py::arg("class_of_interest") = "positive", py::arg("workers") = 1);

  m.def(
      "topk_patches",
      [](const Manifest& manifest, const std::string& region, int patch_size, std::size_t k,
         std::size_t per_sample_cap, std::size_t workers) {
        const TopKOptions options{patch_size, k, per_sample_cap, workers};
        const Label label = manifest.region_table.at(region);
        TopKSet set;
        {
          py::gil_scoped_release release;
          set = topk_patches(manifest, label, options);
        }
        return records_py(set);
      },
      py::arg("manifest"), py::arg("region"), py::arg("patch_size") = 0, py::arg("k") = 20,
      py::arg("per_sample_cap") = 0, py::arg("workers") = 1);

  m.def(
      "evaluate",
      [](const IoRSummary& summary, const std::string& target, const std::vector<std::string>& attributes,
         std::optional<std::map<std::string, std::vector<std::string>>> mapping, bool include_background) {
        const auto resolved = mapping ? AttributeRegionMapping::from_names(*mapping, summary.region_table)
                                      : AttributeRegionMapping::face_attributes_default(summary.region_table);
        const auto result = evaluate_experiment(summary, {target, attributes}, resolved, include_background);
        py::dict d;
        d["per_attribute"] = result.per_attribute;
        d["rp1"] = result.rp1;
        d["rp2"] = result.rp2;
        d["tied"] = result.tied;
        return d;
      },
      py::arg("summary"), py::arg("target"), py::arg("attributes"), py::arg("mapping") = py::none(),
      py::arg("include_background") = false);

  m.def(
      "mean_ranking",
      [](const std::vector<std::optional<std::size_t>>& positions) {
        const auto mean = mean_ranking(positions);
        return py::make_tuple(mean.value(), mean.two_decimals());
      },
      py::arg("positions"), "Mean of 1-based positions as (value, two-decimal string).");

  m.def(
      "color_of",
      [](double v) {
        const Rgb c = color_of(v);
        return py::make_tuple(c.r, c.g, c.b);
      },
      py::arg("value"));
  m.def("hex_color", [](double v) { return hex_color(color_of(v)); }, py::arg("value"));
  m.def(
      "render_heatmap",
      [](const IoRSummary& summary, Normalization norm) {
        return render_heatmap(summary, PrototypeTemplate::builtin(), {240.0, 0.0, norm});
      },
      py::arg("summary"), py::arg("normalization") = Normalization::relative);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("manifest_path", &RunConfig::manifest_path)
      .def_readwrite("output_dir", &RunConfig::output_dir)
      .def_readwrite("class_of_interest", &RunConfig::class_of_interest)
      .def_readwrite("patch_size", &RunConfig::patch_size)
      .def_readwrite("top_k", &RunConfig::top_k)
      .def_readwrite("include_background", &RunConfig::include_background)
      .def_readwrite("normalization", &RunConfig::normalization)
      .def_readwrite("mapping_path", &RunConfig::mapping_path)
      .def_readwrite("seed", &RunConfig::seed)
      .def_readwrite("workers", &RunConfig::workers)
      .def_readwrite("per_sample_cap", &RunConfig::per_sample_cap)
      .def_readwrite("template_path", &RunConfig::template_path)
      .def_readwrite("target", &RunConfig::target)
      .def_readwrite("attribute", &RunConfig::attribute)
      .def_readwrite("summary_path", &RunConfig::summary_path)
      .def_readwrite("spec_path", &RunConfig::spec_path)
      .def_readwrite("regions", &RunConfig::regions);

  m.def("run_command", &run_command, py::arg("name"), py::arg("config"),
        "Runs a CLI command in-process; returns (exit_code, stdout, stderr).");
}
