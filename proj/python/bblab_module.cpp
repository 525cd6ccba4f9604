#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "bblab/bnsa.hpp"
#include "bblab/dataset.hpp"
#include "bblab/dtree.hpp"
#include "bblab/experiments.hpp"
#include "bblab/extract.hpp"
#include "bblab/margins.hpp"
#include "bblab/oneclass.hpp"
#include "bblab/synth.hpp"
#include "bblab/watermark.hpp"

namespace py = pybind11;
using namespace bblab;

namespace {

Signal to_signal(const std::vector<double>& v) { return Signal(v); }

LabeledDataset dataset_from_rows(const std::vector<std::vector<double>>& rows,
                                 const std::vector<int>& labels, int n_classes) {
  LabeledDataset ds;
  for (int c = 0; c < n_classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  if (!rows.empty()) {
    for (std::size_t f = 0; f < rows[0].size(); ++f) {
      ds.feature_names.push_back("f" + std::to_string(f));
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.rows.push_back(Signal(rows[i]));
    ds.labels.push_back(labels[i]);
  }
  ds.recompute_ranges();
  return ds;
}

}  // namespace

PYBIND11_MODULE(_bblab, m) {
  m.doc() = "black-box attack and defense laboratory";
  m.attr("__version__") = "0.1.0";

  m.def(
      "euclidean_distance",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        return euclidean_distance(to_signal(a), to_signal(b));
      },
      py::arg("a"), py::arg("b"));

  m.def(
      "psnr",
      [](const std::vector<double>& original, const std::vector<double>& modified,
         double max_value) { return psnr(to_signal(original), to_signal(modified), max_value); },
      py::arg("original"), py::arg("modified"), py::arg("max_value") = 255.0);

  py::class_<Watermark>(m, "Watermark")
      .def_property_readonly("dim", &Watermark::dim)
      .def_readonly("threshold", &Watermark::threshold)
      .def_readonly("strength", &Watermark::strength)
      .def_property_readonly("pattern",
                             [](const Watermark& wm) { return wm.pattern.values; });

  m.def(
      "generate_watermark",
      [](std::size_t dim, double strength, std::uint64_t seed) {
        Rng rng(seed, streams::kWatermark);
        return generate_watermark(dim, strength, rng);
      },
      py::arg("dim"), py::arg("strength"), py::arg("seed") = 1);

  m.def(
      "embed",
      [](const std::vector<double>& x, const Watermark& wm) {
        return embed(to_signal(x), wm).values;
      },
      py::arg("x"), py::arg("wm"));

  m.def(
      "correlate",
      [](const std::vector<double>& s, const Watermark& wm) {
        return correlate(to_signal(s), wm);
      },
      py::arg("s"), py::arg("wm"));

  m.def(
      "detect",
      [](const std::vector<double>& s, const Watermark& wm) {
        return detect(to_signal(s), wm);
      },
      py::arg("s"), py::arg("wm"));

  m.def(
      "synth_image",
      [](int width, int height, const std::string& kind, std::uint64_t seed) {
        Rng rng(seed, streams::kSynth);
        return synth_image(width, height, image_kind_from_string(kind), rng).values;
      },
      py::arg("width"), py::arg("height"), py::arg("kind") = "texture-noise",
      py::arg("seed") = 1);

  m.def(
      "run_sensitivity_attack",
      [](const std::vector<double>& marked, const Watermark& wm, int max_iterations,
         std::uint64_t seed) {
        BinarySession session = open_binary_session(wm);
        AttackConfig cfg;
        cfg.max_iterations = max_iterations;
        Rng rng(seed, streams::kAttack);
        const AttackResult res = bnsa(session, to_signal(marked), cfg, rng);
        py::dict out;
        out["final"] = res.final_signal.values;
        out["queries"] = res.queries_used;
        out["removed"] = res.removed;
        out["distortion"] = res.distortion;
        out["psnr_db"] = res.psnr_to_original;
        out["iterations"] = res.outer_iterations;
        return out;
      },
      py::arg("marked"), py::arg("wm"), py::arg("max_iterations") = 20, py::arg("seed") = 1);

  py::class_<DecisionTree>(m, "DecisionTree")
      .def_property_readonly("n_leaves", &DecisionTree::n_leaves)
      .def_property_readonly("n_features", &DecisionTree::n_features)
      .def(
          "predict",
          [](const DecisionTree& tree, const std::vector<double>& q) {
            const LeafResponse r = tree.predict(to_signal(q));
            return py::make_tuple(r.label, r.leaf_id, r.confidence);
          },
          py::arg("q"))
      .def("to_text", [](const DecisionTree& tree) { return tree_to_text(tree); });

  m.def(
      "train_tree",
      [](const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
         int n_classes, int min_leaf, int max_depth) {
        return train_tree(dataset_from_rows(rows, labels, n_classes), {min_leaf, max_depth});
      },
      py::arg("rows"), py::arg("labels"), py::arg("n_classes"), py::arg("min_leaf") = 5,
      py::arg("max_depth") = 0);

  m.def(
      "synth_dataset",
      [](const std::string& name, std::uint64_t seed) {
        const LabeledDataset ds = synth_dataset(name, seed);
        py::dict out;
        std::vector<std::vector<double>> rows;
        for (const auto& r : ds.rows) rows.push_back(r.values);
        out["rows"] = rows;
        out["labels"] = ds.labels;
        out["classes"] = ds.class_names;
        out["features"] = ds.feature_names;
        return out;
      },
      py::arg("name"), py::arg("seed") = 1);

  m.def(
      "extract_tree",
      [](const DecisionTree& tree, const std::vector<std::pair<double, double>>& ranges,
         std::uint64_t budget) {
        ExtractionConfig ec;
        for (const auto& [lo, hi] : ranges) ec.feature_ranges.push_back({lo, hi});
        ec.query_budget = budget;
        LeafSession session = open_tree_session(tree);
        const ExtractedModel model = extract_tree(session, ec);
        py::dict out;
        out["p"] = score_extraction(tree, model);
        out["queries"] = model.queries_spent;
        out["terminated_by"] = to_string(model.terminated_by);
        return out;
      },
      py::arg("tree"), py::arg("ranges"), py::arg("budget") = 100000);

  m.def(
      "defended_extraction",
      [](const std::string& dataset, std::uint64_t seed) {
        const LabeledDataset ds = synth_dataset(dataset, seed);
        TreeExperimentConfig cfg;
        cfg.seed = seed;
        const auto rows = run_defend_eval(ds, dataset, 1, cfg);
        py::dict out;
        for (const auto& r : rows) {
          py::dict row;
          row["q"] = r.q_total;
          row["p"] = r.p;
          row["phi"] = r.phi_final;
          row["flagged"] = r.flagged;
          row["terminated_by"] = r.terminated_by;
          out[py::str(r.setting)] = row;
        }
        return out;
      },
      py::arg("dataset") = "iris", py::arg("seed") = 7);
}
