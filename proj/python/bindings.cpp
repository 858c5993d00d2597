// Copyright 2026 The MTDA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings. Manifests and reports cross the boundary as JSON text;
// the mtda package turns them into dicts.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mtda/bench.hpp"
#include "mtda/config.hpp"
#include "mtda/curriculum.hpp"
#include "mtda/heads.hpp"
#include "mtda/losses.hpp"
#include "mtda/report.hpp"

namespace py = pybind11;
using namespace mtda;

namespace {

Eigen::MatrixXd images_of(const Dataset& d) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(d.size()), d.shape.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    for (Eigen::Index k = 0; k < out.cols(); ++k) out(static_cast<Eigen::Index>(i), k) = d.samples[i].image[k];
  return out;
}

std::string run_json(const DatasetRegistry& registry, const HyperParams& hp, bool dry_run) {
  std::unique_ptr<Learner> learner;
  if (dry_run)
    learner = std::make_unique<DryRunLearner>(registry.num_classes, hp.seed);
  else
    learner = make_learner({BackboneSpec{}, registry.num_classes}, hp);
  py::gil_scoped_release release;
  return run(registry, hp, *learner).manifest.dump();
}

}  // namespace

PYBIND11_MODULE(_mtda, m) {
  m.doc() = "Multi-target domain adaptation engine";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<RuntimeAbort>(m, "RuntimeAbort", PyExc_RuntimeError);

  py::class_<SourceConvergence>(m, "SourceConvergence")
      .def(py::init<>())
      .def_readwrite("patience", &SourceConvergence::patience)
      .def_readwrite("min_delta", &SourceConvergence::min_delta)
      .def_readwrite("max_iters", &SourceConvergence::max_iters)
      .def_readwrite("check_every", &SourceConvergence::check_every);

  py::class_<HyperParams>(m, "HyperParams")
      .def(py::init<>())
      .def_readwrite("B_s", &HyperParams::batch_source)
      .def_readwrite("B_t", &HyperParams::batch_target)
      .def_readwrite("tau", &HyperParams::tau)
      .def_readwrite("K", &HyperParams::K)
      .def_readwrite("K_star", &HyperParams::K_star)
      .def_readwrite("K_prime", &HyperParams::K_prime)
      .def_readwrite("lambda_edge", &HyperParams::lambda_edge)
      .def_readwrite("lambda_node", &HyperParams::lambda_node)
      .def_readwrite("lambda_adv", &HyperParams::lambda_adv)
      .def_readwrite("seed", &HyperParams::seed)
      .def_readwrite("source", &HyperParams::source)
      .def_property(
          "lr", [](const HyperParams& h) { return h.optimizer.lr; },
          [](HyperParams& h, double v) { h.optimizer.lr = v; })
      .def("validate", &HyperParams::validate)
      .def("iterations_per_visit", &HyperParams::iterations_per_visit);

  m.def("desk_scale_hyperparams", &desk_scale_hyperparams);

  py::class_<DatasetRegistry>(m, "DatasetRegistry")
      .def_readonly("num_classes", &DatasetRegistry::num_classes)
      .def_readonly("class_names", &DatasetRegistry::class_names)
      .def_property_readonly("num_targets", &DatasetRegistry::num_targets)
      .def_property_readonly("target_names",
                             [](const DatasetRegistry& r) {
                               std::vector<std::string> out;
                               for (const auto& t : r.targets) out.push_back(t.name);
                               return out;
                             })
      .def("source_images", [](const DatasetRegistry& r) { return images_of(r.source); })
      .def("source_labels",
           [](const DatasetRegistry& r) {
             std::vector<int> out;
             for (const auto& s : r.source.samples) out.push_back(*s.label);
             return out;
           })
      .def("target_images", [](const DatasetRegistry& r, int j) {
        if (j < 0 || j >= r.num_targets()) throw py::index_error("target index out of range");
        return images_of(r.targets[static_cast<std::size_t>(j)]);
      });

  m.def("make_synthetic",
        py::overload_cast<int, int, const std::vector<double>&, int, std::uint64_t>(&make_synthetic),
        py::arg("num_classes"), py::arg("num_targets"), py::arg("shifts"), py::arg("per_class"), py::arg("seed"));

  m.def("edge_targets", [](const std::vector<int>& labels) { return build_edge_targets(labels).values; });
  m.def("bce_edge", [](const Eigen::MatrixXd& affinity, const std::vector<int>& labels) {
    return bce_edge<double>(affinity, build_edge_targets(labels)).value;
  });
  m.def("normalize_affinity", &normalize_affinity<double>);
  m.def("select_domain", &select_domain);

  m.def("_run", &run_json, py::arg("registry"), py::arg("hp"), py::arg("dry_run") = false);
  m.def("_render_report", [](const std::string& manifest) {
    const auto r = render_report(nlohmann::json::parse(manifest));
    return py::make_tuple(r.table, r.csv, r.warnings, r.complete);
  });
}
