// Copyright 2026 The ninkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// pybind11 bindings over the 64-bit core. Tensors cross the boundary as
// C-contiguous float64 numpy arrays in (n, c, h, w) order and are copied.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "ninkit/data.hpp"
#include "ninkit/gradcheck.hpp"
#include "ninkit/model.hpp"
#include "ninkit/optim.hpp"
#include "ninkit/viz.hpp"

namespace py = pybind11;
using namespace ninkit;

static_assert(kRealIsDouble, "the Python module wraps the 64-bit build");

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor4 to_tensor(const Array& a) {
  if (a.ndim() != 4) throw ShapeError("expected a 4-d (n, c, h, w) array");
  const Dims d{static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
               static_cast<std::size_t>(a.shape(2)), static_cast<std::size_t>(a.shape(3))};
  return Tensor4::from_slice(d, {a.data(), static_cast<std::size_t>(a.size())});
}

Array to_array(const Tensor4& t) {
  const Dims& d = t.dims();
  Array out({d.n, d.c, d.h, d.w});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::tuple dims_tuple(const Dims& d) { return py::make_tuple(d.n, d.c, d.h, d.w); }

py::dict state_dict(const TrainState& s) {
  py::dict d;
  d["epoch"] = s.epoch;
  d["lr"] = s.lr;
  d["step"] = s.step;
  d["seed"] = s.seed;
  d["drops_done"] = s.drops_done;
  d["finished"] = s.finished;
  return d;
}

py::tuple dataset_tuple(const Dataset& d) {
  py::array_t<Label> labels(static_cast<py::ssize_t>(d.labels.size()), d.labels.data());
  return py::make_tuple(to_array(d.images), labels, d.classes);
}

/// Parameters keyed "<layer>.<param>", e.g. "conv1.weights".
template <class Net>
auto named_parameters(Net& net) {
  using P = std::conditional_t<std::is_const_v<Net>, const Parameter*, Parameter*>;
  std::vector<std::pair<std::string, P>> out;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    auto& layer = net.layer(i);
    for (auto& p : layer.params()) out.emplace_back(layer.name() + "." + p.name, &p);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_ninkit, m) {
  m.doc() = "Network-In-Network engine (64-bit reals)";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  // Registered after the base so the most derived type wins.
  py::register_exception<ShapeError>(m, "ShapeError", error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  py::register_exception<DataError>(m, "DataError", error.ptr());
  py::register_exception<ArgumentError>(m, "ArgumentError", error.ptr());

  py::class_<NetworkConfig>(m, "NetworkConfig")
      .def_readonly("channels", &NetworkConfig::channels)
      .def_readonly("height", &NetworkConfig::height)
      .def_readonly("width", &NetworkConfig::width)
      .def_readonly("classes", &NetworkConfig::classes)
      .def_property_readonly("layer_kinds",
                             [](const NetworkConfig& c) {
                               std::vector<std::string> kinds;
                               for (const auto& l : c.layers) kinds.emplace_back(to_string(l.kind));
                               return kinds;
                             })
      .def_property_readonly("shapes",
                             [](const NetworkConfig& c) {
                               py::list out;
                               for (const Dims& d : c.shapes) out.append(dims_tuple(d));
                               return out;
                             },
                             "Output (n, c, h, w) of every layer for a batch of one.")
      .def("canonical", &NetworkConfig::canonical)
      .def("hash", &NetworkConfig::hash);

  m.def("parse_config", &parse_config, py::arg("text"));
  m.def("load_config", &load_config, py::arg("path"));
  m.def("with_fc_head", &with_fc_head, py::arg("config"), py::arg("head_dropout") = 0.0);
  m.def("downscale_config", &downscale_config, py::arg("config"), py::arg("spatial") = 8,
        py::arg("max_channels") = 4, py::arg("max_classes") = 4);

  py::class_<Network>(m, "Network")
      .def(py::init([](const NetworkConfig& c, std::uint64_t seed, double init_std) {
             return Network::init(c, seed, init_std);
           }),
           py::arg("config"), py::arg("seed") = 1, py::arg("init_std") = kDefaultInitStd)
      .def_property_readonly("config", &Network::config, py::return_value_policy::copy)
      .def_property_readonly("parameter_count", &Network::parameter_count)
      .def(
          "forward",
          [](const Network& net, const Array& images, bool train, std::uint64_t seed,
             std::uint64_t step) {
            Network copy = net;
            copy.set_mode(train ? Mode::train : Mode::eval);
            const Tensor4 logits = copy.forward(to_tensor(images), copy.context(seed, step)).logits;
            return to_array(logits).reshape({logits.dims().n, logits.dims().c});
          },
          py::arg("images"), py::arg("train") = false, py::arg("seed") = 0, py::arg("step") = 0,
          "Logits of shape (n, classes). Eval mode unless train=True.")
      .def(
          "parameters",
          [](const Network& net) {
            py::dict out;
            for (const auto& [name, p] : named_parameters(net)) out[py::str(name)] = to_array(p->value);
            return out;
          },
          "Copies of every parameter, keyed by name, in declaration order.")
      .def(
          "set_parameter",
          [](Network& net, const std::string& name, const Array& value) {
            for (const auto& [key, p] : named_parameters(net)) {
              if (key != name) continue;
              Tensor4 t = to_tensor(value);
              if (t.dims() != p->value.dims()) {
                throw ShapeError(name + " has shape " + p->value.dims().str() + ", got " +
                                 t.dims().str());
              }
              p->value = std::move(t);
              return;
            }
            throw ArgumentError("no parameter named " + name);
          },
          py::arg("name"), py::arg("value"))
      .def(
          "load_checkpoint",
          [](Network& net, const std::filesystem::path& path) {
            return state_dict(load_checkpoint(path, net));
          },
          py::arg("path"), "Restores parameters; 32-bit checkpoints are widened exactly.")
      .def(
          "save_checkpoint",
          [](const Network& net, const std::filesystem::path& path) {
            save_checkpoint(path, net, TrainState{});
          },
          py::arg("path"));

  m.def(
      "gradcheck",
      [](const NetworkConfig& config, std::uint64_t seed, double tolerance) {
        GradcheckOptions opt;
        opt.tolerance = tolerance;
        const auto report = run_gradcheck(config, seed, opt);
        py::list rows;
        for (const auto& r : report.rows) {
          rows.append(py::make_tuple(r.name, r.local.max_error,
                                     r.has_end_to_end ? py::cast(r.end_to_end.max_error)
                                                      : py::none()));
        }
        py::dict out;
        out["passed"] = report.passed();
        out["rows"] = rows;
        out["text"] = report.format();
        return out;
      },
      py::arg("config"), py::arg("seed") = 1, py::arg("tolerance") = 1e-6,
      "Finite-difference check of a scaled-down copy of config. Rows are "
      "(layer, local error, end-to-end error or None).");

  m.def(
      "extract_maps",
      [](const Network& net, const Array& image, Label label) {
        const auto dump = extract_maps(net, to_tensor(image), label);
        const Dims& d = dump.maps.dims();
        py::dict out;
        out["maps"] = to_array(dump.maps).reshape({d.c, d.h, d.w});
        out["logits"] = dump.logits;
        out["predicted"] = dump.predicted;
        return out;
      },
      py::arg("network"), py::arg("image"), py::arg("label") = 0,
      "Category maps entering the final gap layer for a (1, c, h, w) image.");
  m.def("threshold_keep_count", &threshold_keep_count, py::arg("cells"),
        py::arg("fraction") = 0.10);
  m.def(
      "top_indices",
      [](const Array& map, double fraction) {
        return top_indices({map.data(), static_cast<std::size_t>(map.size())}, fraction);
      },
      py::arg("map"), py::arg("fraction") = 0.10);

  m.def(
      "gcn",
      [](const Array& images, double scale, double sqrt_bias) {
        Tensor4 t = to_tensor(images);
        gcn(t, {scale, sqrt_bias, 1e-8});
        return to_array(t);
      },
      py::arg("images"), py::arg("scale") = 55.0, py::arg("sqrt_bias") = 10.0);
  m.def(
      "lcn",
      [](const Array& images, std::size_t kernel) {
        Tensor4 t = to_tensor(images);
        LcnOptions opt;
        opt.kernel = kernel;
        lcn(t, opt);
        return to_array(t);
      },
      py::arg("images"), py::arg("kernel") = 7);

  m.def(
      "load_mnist",
      [](const std::filesystem::path& images, const std::filesystem::path& labels) {
        return dataset_tuple(load_mnist(images, labels));
      },
      py::arg("images_path"), py::arg("labels_path"), "Returns (images, labels, classes).");
  m.def(
      "load_dataset",
      [](const std::filesystem::path& path) { return dataset_tuple(load_dataset(path)); },
      py::arg("path"), "Returns (images, labels, classes).");
  m.def(
      "save_dataset",
      [](const std::filesystem::path& path, const Array& images,
         const std::vector<Label>& labels, std::size_t classes) {
        Dataset d;
        d.images = to_tensor(images);
        d.labels = labels;
        d.classes = classes;
        d.validate();
        save_dataset(d, path);
      },
      py::arg("path"), py::arg("images"), py::arg("labels"), py::arg("classes"));
}
